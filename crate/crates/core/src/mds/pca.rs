use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{orient_columns, Coordinates};
use crate::{Error, Result, VectorRows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub labels: Vec<String>,
    /// Scores on the first two principal components.
    pub coordinates: Coordinates,
    /// Share of total variance per component, descending; sums to 1.
    pub explained: Vec<f64>,
}

/// Projects rows onto their first two principal axes.
///
/// Follows R's `prcomp`: `center` subtracts column means, `scale` divides
/// each column by its standard deviation (n - 1 divisor), or by its root
/// mean square over n - 1 when not centered.
pub fn pca_2d<S: VectorRows + ?Sized>(rows: &S, center: bool, scale: bool) -> Result<PcaResult> {
    let n = rows.len();
    let d = rows.dim();
    if n < 3 {
        return Err(Error::Invalid(format!("PCA needs at least 3 rows, got {n}")));
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| rows.row(i)[j]);
    if center {
        for j in 0..d {
            let mean = x.column(j).sum() / n as f64;
            x.column_mut(j).add_scalar_mut(-mean);
        }
    }
    if scale {
        for j in 0..d {
            let sd = (x.column(j).norm_squared() / (n - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(Error::Degenerate(format!(
                    "coordinate {j} has zero variance and cannot be scaled"
                )));
            }
            x.column_mut(j).scale_mut(1.0 / sd);
        }
    }
    // n is small (dimensions of a questionnaire) while d can be thousands,
    // so decompose the n × n Gram matrix instead of the covariance.
    let gram = &x * x.transpose();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all rows are identical".into()));
    }
    let mut coords = vec![vec![0.0; 2]; n];
    for (c, &k) in order.iter().take(2).enumerate() {
        let s = values[c].sqrt();
        for (i, row) in coords.iter_mut().enumerate() {
            row[c] = eig.eigenvectors[(i, k)] * s;
        }
    }
    orient_columns(&mut coords);
    Ok(PcaResult {
        labels: rows.labels().to_vec(),
        coordinates: coords,
        explained: values.iter().map(|v| v / total).collect(),
    })
}
