//! Embedding sets: loading, saving, random generation, and the HTTP client.

mod client;
mod prompt;

pub use client::{fetch_embeddings, EndpointConfig, EmbeddingCache};
pub use prompt::{compose_input, DEFAULT_INPUT_TEMPLATE, PVQRR_INSTRUCTION};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::QuestionnaireSpec;
use crate::{rng, Error, Result, VectorRows};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub model: Option<String>,
    pub prompt_used: bool,
    pub squid_treated: bool,
}

/// Item id to vector, all vectors finite and of one length `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Invalid(format!(
                "{} ids for {} vectors",
                ids.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        for (id, r) in ids.iter().zip(&rows) {
            if r.len() != dim {
                return Err(Error::Invalid(format!(
                    "ragged vectors: {id:?} has length {}, expected {dim}",
                    r.len()
                )));
            }
        }
        Self::from_flat(ids, dim, rows.concat())
    }

    pub fn from_flat(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Invalid("embedding set has no items".into()));
        }
        if dim < 2 {
            return Err(Error::Invalid(format!("vector length {dim} < 2")));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Invalid(format!(
                "{} values for {} items of length {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate item id {id:?}")));
            }
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite value in vector {:?} at coordinate {}",
                ids[pos / dim],
                pos % dim
            )));
        }
        Ok(EmbeddingSet {
            ids,
            dim,
            data,
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.row(i))
    }

    /// Reorders to the questionnaire's item order, dropping items the
    /// questionnaire does not list.
    pub fn align_to(&self, spec: &QuestionnaireSpec) -> Result<Self> {
        let mut data = Vec::with_capacity(spec.items.len() * self.dim);
        for item in &spec.items {
            let v = self.vector(&item.id).ok_or_else(|| {
                Error::Invalid(format!("embedding for item {:?} missing", item.id))
            })?;
            data.extend_from_slice(v);
        }
        Ok(Self::from_flat(spec.item_ids(), self.dim, data)?.with_provenance(self.provenance.clone()))
    }

    pub fn to_jsonl(&self) -> String {
        self.to_jsonl_with_mean(None)
    }

    pub(crate) fn to_jsonl_with_mean(&self, mean: Option<&[f64]>) -> String {
        let mut out = String::new();
        for (id, v) in self.ids.iter().zip(self.rows()) {
            let rec = JsonlRecord {
                id: Some(id.clone()),
                vector: Some(v.to_vec()),
                mean: None,
            };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes")).unwrap();
        }
        if let Some(m) = mean {
            let rec = JsonlRecord {
                id: None,
                vector: None,
                mean: Some(m.to_vec()),
            };
            writeln!(out, "{}", serde_json::to_string(&rec).expect("record serializes")).unwrap();
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend((1..=self.dim).map(|j| format!("e{j}")));
        w.write_record(&header).expect("in-memory write");
        for (id, v) in self.ids.iter().zip(self.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(v.iter().map(f64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Parses JSONL; returns the set and the `"mean"` record if one exists.
    pub(crate) fn parse_jsonl(text: &str, context: &str) -> Result<(Self, Option<Vec<f64>>)> {
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut mean = None;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(context, format!("line {}: {e}", n + 1)))?;
            match rec {
                JsonlRecord { id: Some(id), vector: Some(v), .. } => {
                    ids.push(id);
                    rows.push(v);
                }
                JsonlRecord { mean: Some(m), id: None, vector: None } => mean = Some(m),
                _ => {
                    return Err(Error::parse(
                        context,
                        format!("line {}: expected {{\"id\", \"vector\"}} or {{\"mean\"}}", n + 1),
                    ))
                }
            }
        }
        let set = Self::new(ids, rows)?;
        Ok((set, mean))
    }

    pub(crate) fn parse_csv(text: &str, context: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::parse(context, e))?.clone();
        if header.get(0) != Some("id") {
            return Err(Error::parse(context, "first column must be `id`"));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::parse(context, e))?;
            let mut cells = rec.iter();
            let id = cells.next().unwrap_or_default().to_string();
            let v = cells
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::parse(context, format!("non-numeric cell {c:?} for {id:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            ids.push(id);
            rows.push(v);
        }
        Self::new(ids, rows)
    }
}

impl VectorRows for EmbeddingSet {
    fn labels(&self) -> &[String] {
        &self.ids
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn is_csv(path: &Path, text: &str) -> bool {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => true,
        Some(e) if e.eq_ignore_ascii_case("jsonl") || e.eq_ignore_ascii_case("json") => false,
        _ => !text.trim_start().starts_with('{'),
    }
}

pub(crate) fn read_embeddings_file(path: &Path) -> Result<(EmbeddingSet, Option<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let context = path.display().to_string();
    let (mut set, mean) = if is_csv(path, &text) {
        (EmbeddingSet::parse_csv(&text, &context)?, None)
    } else {
        EmbeddingSet::parse_jsonl(&text, &context)?
    };
    set.provenance.source = context;
    Ok((set, mean))
}

/// Loads JSONL (`{"id":..,"vector":[..]}` per line) or CSV (`id,e1,...,ed`).
/// A trailing `{"mean":[..]}` record, as written for mean-subtracted sets,
/// is ignored here.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    read_embeddings_file(path).map(|(s, _)| s)
}

pub fn save_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    let text = if is_csv(path, "") { set.to_csv() } else { set.to_jsonl() };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `n_items` vectors of i.i.d. standard normal entries, ids `r1..rn`.
pub fn random_embeddings(n_items: usize, d: usize, seed: u64) -> Result<EmbeddingSet> {
    let ids = (1..=n_items).map(|i| format!("r{i}")).collect();
    random_embeddings_for(ids, d, &mut rng::seeded(seed))
}

pub(crate) fn random_embeddings_for(
    ids: Vec<String>,
    d: usize,
    rng: &mut rng::PortableRng,
) -> Result<EmbeddingSet> {
    if ids.is_empty() || d < 2 {
        return Err(Error::Invalid(format!(
            "random embeddings need n >= 1 and d >= 2 (got n = {}, d = {d})",
            ids.len()
        )));
    }
    let mut data = vec![0.0; ids.len() * d];
    rng::fill_standard_normal(rng, &mut data);
    Ok(EmbeddingSet::from_flat(ids, d, data)?.with_provenance(Provenance {
        source: "standard normal".into(),
        ..Provenance::default()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_nan_and_duplicates_are_rejected() {
        let ids = vec!["a".to_string(), "b".to_string()];
        assert!(EmbeddingSet::new(ids.clone(), vec![vec![0.0; 8], vec![0.0; 9]]).is_err());
        assert!(EmbeddingSet::new(ids.clone(), vec![vec![0.0, f64::NAN], vec![0.0, 1.0]]).is_err());
        assert!(EmbeddingSet::new(vec!["a".into(), "a".into()], vec![vec![0.0; 2]; 2]).is_err());
        assert!(EmbeddingSet::new(vec!["a".into()], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn single_item_d2_is_valid() {
        let s = EmbeddingSet::new(vec!["a".into()], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!((s.len(), s.dim()), (1, 2));
    }

    #[test]
    fn jsonl_and_csv_parse_to_the_same_set() {
        let jsonl = "{\"id\":\"x\",\"vector\":[1,2.5]}\n\n{\"id\":\"y\",\"vector\":[-3,4]}\n";
        let csv = "id,e1,e2\nx,1,2.5\ny,-3,4\n";
        let (a, mean) = EmbeddingSet::parse_jsonl(jsonl, "t").unwrap();
        let b = EmbeddingSet::parse_csv(csv, "t").unwrap();
        assert!(mean.is_none());
        assert_eq!(a.data(), b.data());
        assert_eq!(a.ids(), b.ids());
        assert_eq!(EmbeddingSet::parse_csv(&a.to_csv(), "t").unwrap().data(), a.data());
        assert_eq!(EmbeddingSet::parse_jsonl(&a.to_jsonl(), "t").unwrap().0.data(), a.data());
    }

    #[test]
    fn random_embeddings_are_deterministic() {
        let a = random_embeddings(57, 64, 1).unwrap();
        let b = random_embeddings(57, 64, 1).unwrap();
        let c = random_embeddings(57, 64, 2).unwrap();
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), c.data());
        assert!(random_embeddings(0, 4, 1).is_err());
        assert!(random_embeddings(3, 1, 1).is_err());
    }

    #[test]
    fn random_entries_have_standard_moments() {
        // n·d = 57·4096 > 1e5.
        let s = random_embeddings(57, 4096, 3).unwrap();
        let n = s.data().len() as f64;
        let mean = s.data().iter().sum::<f64>() / n;
        let var = s.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }
}
