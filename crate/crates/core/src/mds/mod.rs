//! Multidimensional scaling and the PCA comparison.

mod classical;
mod isotonic;
mod pca;
mod smacof;

pub use classical::classical_init;
pub use isotonic::{isotonic_blocks, isotonic_fit, Block};
pub use pca::{pca_2d, PcaResult};
pub use smacof::{smacof, smacof_multistart, stress1, MdsConfiguration, MdsInit, MdsOptions, MdsType, Ties};

/// n points × p coordinates, row per point.
pub type Coordinates = Vec<Vec<f64>>;

pub(crate) fn pair_distances(x: &[Vec<f64>], pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(i, j)| {
            x[i].iter()
                .zip(&x[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

pub(crate) fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

pub(crate) fn center_columns(x: &mut [Vec<f64>]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    let p = x[0].len();
    for c in 0..p {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        for r in x.iter_mut() {
            r[c] -= mean;
        }
    }
}

/// Flips each column so its largest-magnitude entry is positive.
pub(crate) fn orient_columns(x: &mut [Vec<f64>]) {
    if x.is_empty() {
        return;
    }
    for c in 0..x[0].len() {
        let pivot = x
            .iter()
            .map(|r| r[c])
            .fold(0.0f64, |best, v| if v.abs() > best.abs() + 1e-12 { v } else { best });
        if pivot < 0.0 {
            for r in x.iter_mut() {
                r[c] = -r[c];
            }
        }
    }
}

/// Parses `label,x,y,...` CSV as written by [`MdsConfiguration::to_csv`].
pub fn configuration_from_csv(text: &str, context: &str) -> crate::Result<(Vec<String>, Coordinates)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| crate::Error::parse(context, e))?;
        let mut cells = rec.iter();
        labels.push(cells.next().unwrap_or_default().to_string());
        let row = cells
            .map(|c| c.parse::<f64>().map_err(|_| crate::Error::parse(context, format!("non-numeric cell {c:?}"))))
            .collect::<crate::Result<Vec<_>>>()?;
        coords.push(row);
    }
    let p = coords.first().map_or(0, Vec::len);
    if p == 0 || coords.iter().any(|r| r.len() != p) {
        return Err(crate::Error::parse(context, "configuration rows must share at least one coordinate"));
    }
    Ok((labels, coords))
}
