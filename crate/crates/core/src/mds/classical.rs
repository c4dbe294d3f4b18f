use nalgebra::{DMatrix, SymmetricEigen};

use super::{orient_columns, Coordinates};
use crate::matrix::SymmetricMatrix;
use crate::{Error, Result};

/// Torgerson scaling: double-center `-D∘D / 2` and keep the `p` leading
/// spectral coordinates. Negative eigenvalues are clamped to zero.
pub fn classical_init(d: &SymmetricMatrix, p: usize) -> Result<Coordinates> {
    classical_from_rows(d.rows(), p)
}

pub(crate) fn classical_from_rows(d: &[Vec<f64>], p: usize) -> Result<Coordinates> {
    let n = d.len();
    if p == 0 {
        return Err(Error::Invalid("target dimensionality must be at least 1".into()));
    }
    if n < p + 1 {
        return Err(Error::Invalid(format!(
            "classical scaling of {n} points into {p} dimensions needs n >= p + 1"
        )));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d[i][j] * d[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut x = vec![vec![0.0; p]; n];
    for (c, &k) in order.iter().take(p).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        for (i, row) in x.iter_mut().enumerate() {
            row[c] = eig.eigenvectors[(i, k)] * scale;
        }
    }
    orient_columns(&mut x);
    Ok(x)
}
