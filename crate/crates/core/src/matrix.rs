//! Labeled square matrices and their CSV form.
//!
//! CSV layout: the first row holds an (ignored) corner cell followed by the
//! column labels; every following row starts with its row label. Values are
//! written with Rust's shortest round-trip float formatting.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance applied when loading externally produced matrices.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    /// Unit diagonal, entries in [-1, 1].
    Correlation,
    /// Zero diagonal, non-negative entries.
    Dissimilarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl SymmetricMatrix {
    /// Builds a matrix without checking symmetry; use [`Self::max_asymmetry`]
    /// or [`Self::validate`] where the caller cannot guarantee it.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!(
                "matrix with {n} labels is not {n}x{n}"
            )));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::Invalid(format!(
                    "duplicate label {l:?} at positions {j} and {i}"
                )));
            }
        }
        if let Some((i, j)) = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|&(i, j)| !rows[i][j].is_finite())
        {
            return Err(Error::Invalid(format!(
                "non-finite entry at ({}, {})",
                labels[i], labels[j]
            )));
        }
        Ok(SymmetricMatrix { labels, rows })
    }

    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = labels.len();
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        SymmetricMatrix { labels, rows }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.rows[i][j] - self.rows[j][i]).abs());
            }
        }
        worst
    }

    /// Strict upper triangle in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.rows[i][j]);
            }
        }
        out
    }

    /// Replaces both triangles by their average.
    pub fn symmetrize(&mut self) {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.rows[i][j] + self.rows[j][i]);
                self.rows[i][j] = v;
                self.rows[j][i] = v;
            }
        }
    }

    pub fn validate(&self, kind: MatrixKind, tol: f64) -> Result<()> {
        let asym = self.max_asymmetry();
        if asym > tol {
            return Err(Error::Invalid(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
            )));
        }
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let v = self.rows[i][j];
                let (a, b) = (&self.labels[i], &self.labels[j]);
                match kind {
                    MatrixKind::Correlation => {
                        if i == j && (v - 1.0).abs() > tol {
                            return Err(Error::Invalid(format!(
                                "correlation diagonal at {a} is {v}, expected 1"
                            )));
                        }
                        if !(-1.0 - tol..=1.0 + tol).contains(&v) {
                            return Err(Error::Invalid(format!(
                                "correlation ({a}, {b}) = {v} outside [-1, 1]"
                            )));
                        }
                    }
                    MatrixKind::Dissimilarity => {
                        if i == j && v.abs() > tol {
                            return Err(Error::Invalid(format!(
                                "dissimilarity diagonal at {a} is {v}, expected 0"
                            )));
                        }
                        if v < -tol {
                            return Err(Error::Invalid(format!(
                                "negative dissimilarity ({a}, {b}) = {v}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Permutes rows and columns into `order`. Every label must be present
    /// and `order` must cover the matrix exactly.
    pub fn reorder(&self, order: &[String]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::Invalid(format!(
                "expected {} labels, matrix has {}",
                order.len(),
                self.n()
            )));
        }
        let idx = order
            .iter()
            .map(|l| {
                self.index_of(l)
                    .ok_or_else(|| Error::Invalid(format!("label {l:?} missing from matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymmetricMatrix::from_fn(order.to_vec(), |i, j| {
            self.rows[idx[i]][idx[j]]
        }))
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, row) in self.labels.iter().zip(&self.rows) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv_str(text: &str, context: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::parse(context, e))?.clone();
        let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(context, e))?;
            let mut cells = rec.iter();
            let label = cells
                .next()
                .ok_or_else(|| Error::parse(context, format!("empty row {}", line + 2)))?;
            row_labels.push(label.to_string());
            let values = cells
                .map(|c| {
                    c.parse::<f64>().map_err(|_| {
                        Error::parse(context, format!("non-numeric cell {c:?} in row {label:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(values);
        }
        if row_labels.len() != col_labels.len() {
            return Err(Error::parse(
                context,
                format!(
                    "{} column labels but {} rows",
                    col_labels.len(),
                    row_labels.len()
                ),
            ));
        }
        // Rows may be listed in a different order than columns.
        let n = col_labels.len();
        let mut by_col = vec![Vec::new(); n];
        for (label, row) in row_labels.iter().zip(rows) {
            let i = col_labels.iter().position(|c| c == label).ok_or_else(|| {
                Error::parse(context, format!("row label {label:?} has no matching column"))
            })?;
            if !by_col[i].is_empty() {
                return Err(Error::parse(context, format!("row label {label:?} repeated")));
            }
            by_col[i] = row;
        }
        SymmetricMatrix::new(col_labels, by_col).map_err(|e| Error::parse(context, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }
}
