//! Questionnaire specifications, reference matrices, and variant merging.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingSet;
use crate::matrix::{MatrixKind, SymmetricMatrix, LOAD_SYMMETRY_TOL};
use crate::{Error, Result, VectorRows};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub id: String,
    pub dimension: String,
    /// Variant label (e.g. "female", "male") to item text.
    pub texts: BTreeMap<String, String>,
}

/// Items, their dimensions, and the scoring key that ties them together.
///
/// Item and dimension order is the file order and is kept everywhere
/// downstream, so matrix layouts are reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireSpec {
    pub dimensions: Vec<Dimension>,
    pub items: Vec<ItemSpec>,
}

impl QuestionnaireSpec {
    pub fn new(dimensions: Vec<Dimension>, items: Vec<ItemSpec>) -> Result<Self> {
        let spec = QuestionnaireSpec { dimensions, items };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::Invalid("questionnaire has no dimensions".into()));
        }
        let mut codes = HashSet::new();
        for d in &self.dimensions {
            if d.code.is_empty() {
                return Err(Error::Invalid("empty dimension code".into()));
            }
            if !codes.insert(d.code.as_str()) {
                return Err(Error::Invalid(format!("duplicate dimension code {:?}", d.code)));
            }
        }
        let mut ids = HashSet::new();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for item in &self.items {
            if !ids.insert(item.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate item id {:?}", item.id)));
            }
            if !codes.contains(item.dimension.as_str()) {
                return Err(Error::Invalid(format!(
                    "item {:?} references unknown dimension {:?}",
                    item.id, item.dimension
                )));
            }
            if item.texts.is_empty() {
                return Err(Error::Invalid(format!("item {:?} has no texts", item.id)));
            }
            if let Some((variant, _)) = item.texts.iter().find(|(_, t)| t.trim().is_empty()) {
                return Err(Error::Invalid(format!(
                    "item {:?} has empty text for variant {variant:?}",
                    item.id
                )));
            }
            *counts.entry(item.dimension.as_str()).or_default() += 1;
        }
        for d in &self.dimensions {
            let k = counts.get(d.code.as_str()).copied().unwrap_or(0);
            if k < 2 {
                return Err(Error::Invalid(format!(
                    "dimension {:?} has {k} item(s), at least 2 required",
                    d.code
                )));
            }
        }
        Ok(())
    }

    pub fn dimension_codes(&self) -> Vec<String> {
        self.dimensions.iter().map(|d| d.code.clone()).collect()
    }

    pub fn item_ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    /// Items of one dimension, in file order.
    pub fn items_of<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a ItemSpec> + 'a {
        self.items.iter().filter(move |i| i.dimension == code)
    }

    /// Every variant label used by any item, sorted.
    pub fn variants(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .items
            .iter()
            .flat_map(|i| i.texts.keys().cloned())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        v.sort();
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json_str(text: &str, context: &str) -> Result<Self> {
        let spec: QuestionnaireSpec =
            serde_json::from_str(text).map_err(|e| Error::parse(context, e))?;
        spec.validate()?;
        Ok(spec)
    }
}

pub fn load_questionnaire(path: &Path) -> Result<QuestionnaireSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    QuestionnaireSpec::from_json_str(&text, &path.display().to_string())
}

/// A human (or other external) matrix over questionnaire dimensions.
pub type ReferenceMatrix = SymmetricMatrix;

/// Loads a labeled CSV matrix and aligns it to `labels`.
///
/// Asymmetry up to 1e-6 is tolerated and averaged away, so the result is
/// exactly symmetric.
pub fn load_reference_matrix(path: &Path, labels: &[String], kind: MatrixKind) -> Result<ReferenceMatrix> {
    let raw = SymmetricMatrix::read_csv(path)?;
    reference_from_matrix(raw, labels, kind)
}

pub fn reference_from_matrix(
    raw: SymmetricMatrix,
    labels: &[String],
    kind: MatrixKind,
) -> Result<ReferenceMatrix> {
    let mut m = raw.reorder(labels)?;
    m.validate(kind, LOAD_SYMMETRY_TOL)?;
    m.symmetrize();
    Ok(m)
}

/// Element-wise mean of several embedding sets of the same items, e.g. the
/// gendered variants of one questionnaire.
pub fn merge_variants(sets: &[EmbeddingSet]) -> Result<EmbeddingSet> {
    let first = sets
        .first()
        .ok_or_else(|| Error::Invalid("no embedding sets to merge".into()))?;
    for (k, s) in sets.iter().enumerate().skip(1) {
        if s.ids() != first.ids() {
            return Err(Error::Invalid(format!(
                "embedding set {k} does not have the same item ids as set 0"
            )));
        }
        if s.dim() != first.dim() {
            return Err(Error::Invalid(format!(
                "embedding set {k} has vector length {}, set 0 has {}",
                s.dim(),
                first.dim()
            )));
        }
    }
    let scale = 1.0 / sets.len() as f64;
    let mut data = vec![0.0; first.data().len()];
    for s in sets {
        for (acc, v) in data.iter_mut().zip(s.data()) {
            *acc += v;
        }
    }
    data.iter_mut().for_each(|x| *x *= scale);
    let mut provenance = first.provenance().clone();
    provenance.source = format!("mean of {} variant set(s)", sets.len());
    EmbeddingSet::from_flat(first.ids().to_vec(), first.dim(), data)
        .map(|s| s.with_provenance(provenance))
}
