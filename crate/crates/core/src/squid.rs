//! Questionnaire-mean subtraction and aggregation of items to dimensions.
//!
//! The mean is taken over every item of the questionnaire, never per
//! dimension: centering within a dimension would erase the contrasts between
//! dimensions that the analysis is after. Vectors are not re-normalized
//! afterwards since every downstream similarity is Pearson and therefore
//! scale-invariant.

use std::fs;
use std::path::Path;

use crate::corpus::QuestionnaireSpec;
use crate::embed::{read_embeddings_file, EmbeddingSet};
use crate::{Error, Result, VectorRows};

/// An embedding set whose vectors sum to zero, together with the
/// questionnaire-mean vector that was removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SquidEmbeddingSet {
    set: EmbeddingSet,
    mean: Vec<f64>,
}

impl SquidEmbeddingSet {
    pub fn set(&self) -> &EmbeddingSet {
        &self.set
    }

    pub fn into_set(self) -> EmbeddingSet {
        self.set
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// JSONL with one record per item followed by a `{"mean": [...]}` record.
    pub fn to_jsonl(&self) -> String {
        self.set.to_jsonl_with_mean(Some(&self.mean))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (mut set, mean) = read_embeddings_file(path)?;
        let mean = mean.ok_or_else(|| {
            Error::parse(path.display().to_string(), "no \"mean\" record in mean-subtracted set")
        })?;
        if mean.len() != set.dim() {
            return Err(Error::parse(
                path.display().to_string(),
                format!("mean has length {}, vectors have {}", mean.len(), set.dim()),
            ));
        }
        set.provenance_mut().squid_treated = true;
        Ok(SquidEmbeddingSet { set, mean })
    }
}

impl VectorRows for SquidEmbeddingSet {
    fn labels(&self) -> &[String] {
        self.set.labels()
    }

    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn row(&self, i: usize) -> &[f64] {
        self.set.row(i)
    }
}

/// Per-dimension mean vectors, in questionnaire dimension order.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEmbeddingSet {
    codes: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl DimensionEmbeddingSet {
    pub fn codes(&self) -> &[String] {
        &self.codes
    }
}

impl VectorRows for DimensionEmbeddingSet {
    fn labels(&self) -> &[String] {
        &self.codes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut n = 0usize;
    for r in rows {
        for (a, x) in acc.iter_mut().zip(r) {
            *a += x;
        }
        n += 1;
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}

/// Coordinate-wise mean over all items.
pub fn questionnaire_mean<S: VectorRows + ?Sized>(set: &S) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::Degenerate("mean of an empty embedding set".into()));
    }
    Ok(mean_of((0..set.len()).map(|i| set.row(i)), set.dim()))
}

/// Subtracts the questionnaire mean from every item vector.
pub fn squid_transform(set: &EmbeddingSet) -> Result<SquidEmbeddingSet> {
    if set.len() < 2 {
        return Err(Error::Degenerate(
            "mean subtraction of a single item yields the zero vector".into(),
        ));
    }
    let mean = questionnaire_mean(set)?;
    let data: Vec<f64> = set
        .rows()
        .flat_map(|r| r.iter().zip(&mean).map(|(x, m)| x - m))
        .collect();
    let mut provenance = set.provenance().clone();
    provenance.squid_treated = true;
    let out = EmbeddingSet::from_flat(set.ids().to_vec(), set.dim(), data)?.with_provenance(provenance);
    Ok(SquidEmbeddingSet { set: out, mean })
}

/// Averages item vectors within each questionnaire dimension.
pub fn aggregate_dimensions<S: VectorRows + ?Sized>(
    set: &S,
    spec: &QuestionnaireSpec,
) -> Result<DimensionEmbeddingSet> {
    let dim = set.dim();
    let index = |id: &str| {
        set.labels()
            .iter()
            .position(|l| l == id)
            .ok_or_else(|| Error::Invalid(format!("embedding for item {id:?} missing")))
    };
    let mut data = Vec::with_capacity(spec.dimensions.len() * dim);
    for d in &spec.dimensions {
        let rows = spec
            .items_of(&d.code)
            .map(|item| index(&item.id).map(|i| set.row(i)))
            .collect::<Result<Vec<_>>>()?;
        data.extend(mean_of(rows.into_iter(), dim));
    }
    Ok(DimensionEmbeddingSet {
        codes: spec.dimension_codes(),
        dim,
        data,
    })
}
