//! SMACOF stress majorization with ratio or ordinal (monotone) disparities.
//!
//! Disparities are kept normalized to `Σ d̂² = n(n-1)/2`. Each iteration is
//! a Guttman transform for fixed disparities followed, for ordinal MDS, by a
//! monotone regression of the new distances on the dissimilarity order.
//! Both steps can only lower the normalized raw stress
//! `Σ (d̂ - d)² / Σ d̂²`, which is what the trace records.
//!
//! Ordinal runs start from classical scaling of the dissimilarity ranks, so
//! the whole computation depends on the order of the input alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classical::classical_from_rows;
use super::{center_columns, pair_distances, upper_pairs, Coordinates};
use crate::matrix::{MatrixKind, SymmetricMatrix};
use crate::mds::isotonic_fit;
use crate::{rng, Error, Result};

const INPUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdsType {
    Ordinal,
    Ratio,
}

/// Treatment of tied dissimilarities in ordinal MDS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    /// Tied dissimilarities impose no order on their disparities.
    Primary,
    /// Tied dissimilarities get equal disparities.
    Secondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MdsInit {
    Classical,
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdsOptions {
    pub kind: MdsType,
    pub dims: usize,
    pub max_iter: usize,
    /// Stop once an iteration lowers the normalized stress by less than this.
    pub epsilon: f64,
    pub ties: Ties,
    pub init: MdsInit,
}

impl Default for MdsOptions {
    fn default() -> Self {
        MdsOptions {
            kind: MdsType::Ordinal,
            dims: 2,
            max_iter: 1000,
            epsilon: 1e-6,
            ties: Ties::Primary,
            init: MdsInit::Classical,
        }
    }
}

impl MdsOptions {
    pub fn ratio() -> Self {
        MdsOptions { kind: MdsType::Ratio, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::Invalid("MDS needs at least one dimension".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Invalid("MDS epsilon must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid("MDS max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsConfiguration {
    pub labels: Vec<String>,
    /// Centered, n × p. Ratio solutions are in the units of the input.
    pub coordinates: Coordinates,
    /// Stress-1 of the final coordinates against the final disparities.
    pub stress: f64,
    pub iterations: usize,
    /// Square root of the normalized raw stress, starting with the
    /// initial configuration; non-increasing.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub disparities: SymmetricMatrix,
}

impl MdsConfiguration {
    /// `label,x,y,...` rows with a header.
    pub fn to_csv(&self) -> String {
        let p = self.coordinates.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        let axes = ["x", "y", "z"];
        header.extend((0..p).map(|c| axes.get(c).map_or(format!("d{}", c + 1), |s| s.to_string())));
        w.write_record(&header).expect("in-memory write");
        for (l, row) in self.labels.iter().zip(&self.coordinates) {
            let mut rec = vec![l.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Stress-1: `sqrt(Σ (d̂ - d)² / Σ d²)` over pairs `i < j`, with `d` the
/// Euclidean distances of `coords`.
pub fn stress1(coords: &[Vec<f64>], disparities: &SymmetricMatrix) -> Result<f64> {
    if coords.len() != disparities.n() {
        return Err(Error::Invalid(format!(
            "{} points but {}x{} disparities",
            coords.len(),
            disparities.n(),
            disparities.n()
        )));
    }
    let pairs = upper_pairs(coords.len());
    let d = pair_distances(coords, &pairs);
    let dhat: Vec<f64> = pairs.iter().map(|&(i, j)| disparities.get(i, j)).collect();
    stress1_pairs(&d, &dhat)
}

fn stress1_pairs(d: &[f64], dhat: &[f64]) -> Result<f64> {
    let den: f64 = d.iter().map(|v| v * v).sum();
    if !(den > 0.0) {
        return Err(Error::Degenerate("all configuration distances are zero".into()));
    }
    let num: f64 = d.iter().zip(dhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((num / den).sqrt())
}

/// Pair order by dissimilarity and the runs of exactly tied values.
struct RankOrder {
    order: Vec<usize>,
    ties: Vec<std::ops::Range<usize>>,
}

impl RankOrder {
    fn new(delta: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..delta.len()).collect();
        order.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]).then(a.cmp(&b)));
        let mut ties = Vec::new();
        let mut start = 0;
        for k in 1..=order.len() {
            if k == order.len() || delta[order[k]] != delta[order[start]] {
                ties.push(start..k);
                start = k;
            }
        }
        RankOrder { order, ties }
    }

    /// Average ranks (1-based) of the dissimilarities.
    fn ranks(&self, len: usize) -> Vec<f64> {
        let mut r = vec![0.0; len];
        for t in &self.ties {
            let avg = (t.start + t.end + 1) as f64 / 2.0;
            for &k in &self.order[t.clone()] {
                r[k] = avg;
            }
        }
        r
    }

    /// Monotone regression of `d` on this order, unnormalized.
    fn fit(&self, d: &[f64], ties: Ties) -> Vec<f64> {
        let mut dhat = vec![0.0; d.len()];
        match ties {
            Ties::Primary => {
                let mut seq = Vec::with_capacity(d.len());
                for t in &self.ties {
                    let start = seq.len();
                    seq.extend_from_slice(&self.order[t.clone()]);
                    seq[start..].sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
                }
                let values: Vec<f64> = seq.iter().map(|&k| d[k]).collect();
                let fitted = isotonic_fit(&values, &vec![1.0; values.len()]);
                for (&k, f) in seq.iter().zip(fitted) {
                    dhat[k] = f;
                }
            }
            Ties::Secondary => {
                let (means, weights): (Vec<f64>, Vec<f64>) = self
                    .ties
                    .iter()
                    .map(|t| {
                        let idx = &self.order[t.clone()];
                        (idx.iter().map(|&k| d[k]).sum::<f64>() / idx.len() as f64, idx.len() as f64)
                    })
                    .unzip();
                let fitted = isotonic_fit(&means, &weights);
                for (t, f) in self.ties.iter().zip(fitted) {
                    for &k in &self.order[t.clone()] {
                        dhat[k] = f;
                    }
                }
            }
        }
        dhat
    }
}

fn normalize(dhat: &mut [f64], target: f64) -> Result<()> {
    let ss: f64 = dhat.iter().map(|v| v * v).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("disparities collapsed to zero".into()));
    }
    let s = (target / ss).sqrt();
    dhat.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

fn normalized_stress(d: &[f64], dhat: &[f64], target: f64) -> f64 {
    d.iter().zip(dhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / target
}

fn guttman(x: &[Vec<f64>], pairs: &[(usize, usize)], d: &[f64], dhat: &[f64]) -> Coordinates {
    let n = x.len();
    let p = x[0].len();
    let mut b = vec![vec![0.0; n]; n];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let v = if d[k] > 0.0 { -dhat[k] / d[k] } else { 0.0 };
        b[i][j] = v;
        b[j][i] = v;
    }
    for (i, row) in b.iter_mut().enumerate() {
        let off: f64 = row.iter().sum();
        row[i] = -off;
    }
    let inv_n = 1.0 / n as f64;
    (0..n)
        .map(|i| {
            (0..p)
                .map(|c| (0..n).map(|j| b[i][j] * x[j][c]).sum::<f64>() * inv_n)
                .collect()
        })
        .collect()
}

fn check_input(delta: &SymmetricMatrix, opts: &MdsOptions) -> Result<()> {
    opts.validate()?;
    let n = delta.n();
    if n < 3 {
        return Err(Error::Invalid(format!("MDS needs at least 3 objects, got {n}")));
    }
    if n < opts.dims + 1 {
        return Err(Error::Invalid(format!(
            "{n} objects cannot be scaled into {} dimensions",
            opts.dims
        )));
    }
    delta.validate(MatrixKind::Dissimilarity, INPUT_TOL)
}

/// Scales the dissimilarity matrix `delta` into `opts.dims` dimensions.
///
/// A run that hits `max_iter` is returned with `converged = false`.
pub fn smacof(delta: &SymmetricMatrix, opts: &MdsOptions) -> Result<MdsConfiguration> {
    check_input(delta, opts)?;
    let n = delta.n();
    let p = opts.dims;
    let pairs = upper_pairs(n);
    let raw: Vec<f64> = pairs.iter().map(|&(i, j)| delta.get(i, j)).collect();
    let target = pairs.len() as f64;
    let ss: f64 = raw.iter().map(|v| v * v).sum();
    if !(ss > 0.0) {
        return Err(Error::Degenerate("all dissimilarities are zero".into()));
    }
    let unit = (target / ss).sqrt();
    let rank = RankOrder::new(&raw);

    let mut x: Coordinates = match opts.init {
        MdsInit::Classical => {
            let basis = match opts.kind {
                MdsType::Ratio => raw.iter().map(|v| v * unit).collect(),
                MdsType::Ordinal => rank.ranks(raw.len()),
            };
            let mut m = vec![vec![0.0; n]; n];
            for (&(i, j), v) in pairs.iter().zip(basis) {
                m[i][j] = v;
                m[j][i] = v;
            }
            classical_from_rows(&m, p)?
        }
        MdsInit::Random(seed) => {
            let mut x = rng::standard_normal_matrix(&mut rng::seeded(seed), n, p);
            center_columns(&mut x);
            x
        }
    };

    let mut d = pair_distances(&x, &pairs);
    let refit = |d: &[f64]| -> Result<Vec<f64>> {
        let mut dhat = rank.fit(d, opts.ties);
        normalize(&mut dhat, target)?;
        Ok(dhat)
    };
    let mut dhat = match opts.kind {
        MdsType::Ratio => raw.iter().map(|v| v * unit).collect(),
        MdsType::Ordinal => refit(&d)?,
    };
    let mut current = normalized_stress(&d, &dhat, target);
    let mut trace = vec![current.sqrt()];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        x = guttman(&x, &pairs, &d, &dhat);
        d = pair_distances(&x, &pairs);
        if opts.kind == MdsType::Ordinal {
            dhat = refit(&d)?;
        }
        let next = normalized_stress(&d, &dhat, target);
        trace.push(next.sqrt());
        let gain = current - next;
        current = next;
        if gain < opts.epsilon {
            converged = true;
            break;
        }
    }

    center_columns(&mut x);
    if opts.kind == MdsType::Ratio {
        // Back to the units of the input.
        let back = 1.0 / unit;
        x.iter_mut().flatten().for_each(|v| *v *= back);
        dhat.iter_mut().for_each(|v| *v *= back);
        d.iter_mut().for_each(|v| *v *= back);
    }
    let stress = stress1_pairs(&d, &dhat)?;
    let mut disp = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(&dhat) {
        disp[i][j] = *v;
        disp[j][i] = *v;
    }
    Ok(MdsConfiguration {
        labels: delta.labels().to_vec(),
        coordinates: x,
        stress,
        iterations,
        trace,
        converged,
        disparities: SymmetricMatrix::new(delta.labels().to_vec(), disp)?,
    })
}

/// Runs `opts.init` plus `random_starts` seeded random starts and keeps the
/// lowest-stress solution (earliest start on ties).
pub fn smacof_multistart(
    delta: &SymmetricMatrix,
    opts: &MdsOptions,
    random_starts: usize,
    seed: u64,
) -> Result<MdsConfiguration> {
    let mut inits = vec![opts.init];
    inits.extend((0..random_starts).map(|k| MdsInit::Random(rng::derive_seed(seed, &format!("mds-start-{k}")))));
    let runs = inits
        .into_par_iter()
        .map(|init| smacof(delta, &MdsOptions { init, ..opts.clone() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.stress < best.stress { r } else { best })
        .expect("at least one start"))
}
