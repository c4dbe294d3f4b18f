//! Procrustes superimposition and congruence of two configurations.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mds::Coordinates;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcrustesResult {
    /// p × p orthogonal; reflections allowed.
    pub rotation: Vec<Vec<f64>>,
    pub scale: f64,
    /// Row vector added after rotation: `transformed = scale · testee · rotation + translation`.
    pub translation: Vec<f64>,
    pub transformed: Coordinates,
    /// Sum of squared differences between target and transformed testee.
    pub residual: f64,
    pub congruence: Vec<f64>,
}

fn to_matrix(x: &[Vec<f64>]) -> DMatrix<f64> {
    let p = x.first().map_or(0, Vec::len);
    DMatrix::from_fn(x.len(), p, |i, j| x[i][j])
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn check_shape(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = a.len();
    let p = a.first().map_or(0, Vec::len);
    if b.len() != n || a.iter().chain(b).any(|r| r.len() != p) {
        return Err(Error::Invalid("configurations differ in shape".into()));
    }
    if p == 0 {
        return Err(Error::Invalid("configurations have no columns".into()));
    }
    Ok((n, p))
}

fn distinct_points(x: &[Vec<f64>]) -> bool {
    x.iter().any(|r| r != &x[0])
}

fn centered(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let mean = m.row_mean();
    let mut c = m.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    (c, DMatrix::from_row_slice(1, m.ncols(), mean.as_slice()))
}

/// Least-squares fit of `testee` onto `target` by translation, rotation,
/// reflection and (optionally) uniform scaling.
pub fn procrustes_fit(target: &[Vec<f64>], testee: &[Vec<f64>], allow_scale: bool) -> Result<ProcrustesResult> {
    let (n, p) = check_shape(target, testee)?;
    if n < p + 1 {
        return Err(Error::Invalid(format!("Procrustes in {p} dimensions needs at least {} points", p + 1)));
    }
    if !distinct_points(target) || !distinct_points(testee) {
        return Err(Error::Degenerate("configuration has fewer than 2 distinct points".into()));
    }
    let (xc, x_mean) = centered(&to_matrix(target));
    let (yc, y_mean) = centered(&to_matrix(testee));

    let cross = yc.transpose() * &xc;
    let svd = cross.svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let rotation = u * v_t;
    let scale = if allow_scale {
        svd.singular_values.sum() / yc.norm_squared()
    } else {
        1.0
    };
    let translation = &x_mean - &y_mean * &rotation * scale;
    let mut transformed = &yc * &rotation * scale;
    for mut row in transformed.row_iter_mut() {
        row += &x_mean;
    }
    let residual = (to_matrix(target) - &transformed).norm_squared();
    let transformed = to_rows(&transformed);
    let congruence = congruence(target, &transformed)?;
    Ok(ProcrustesResult {
        rotation: to_rows(&rotation),
        scale,
        translation: translation.iter().copied().collect(),
        transformed,
        residual,
        congruence,
    })
}

/// Cosine similarity between corresponding columns.
///
/// Columns are used as given; for centered configurations (MDS output and
/// Procrustes fits onto them) this equals the product-moment congruence.
pub fn congruence(target: &[Vec<f64>], other: &[Vec<f64>]) -> Result<Vec<f64>> {
    let (_, p) = check_shape(target, other)?;
    (0..p)
        .map(|c| {
            let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
            for (a, b) in target.iter().zip(other) {
                ab += a[c] * b[c];
                aa += a[c] * a[c];
                bb += b[c] * b[c];
            }
            if !(aa > 0.0 && bb > 0.0) {
                return Err(Error::Degenerate(format!("column {c} is zero")));
            }
            Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub mean: Vec<f64>,
    pub p95: Vec<f64>,
    pub p999: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CongruenceNullTest {
    pub observed: Vec<f64>,
    /// reps × p congruences between pairs of random configurations.
    pub null_samples: Vec<Vec<f64>>,
    /// One-sided, `(1 + #{null >= observed}) / (1 + reps)`.
    pub p_values: Vec<f64>,
    pub summary: NullSummary,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution of per-axis congruence between two independent standard
/// normal n × p configurations after Procrustes fitting one onto the other.
///
/// Both random configurations are centered, like MDS output.
pub fn congruence_null_test(
    n: usize,
    p: usize,
    reps: usize,
    observed: &[f64],
    allow_scale: bool,
    seed: u64,
) -> Result<CongruenceNullTest> {
    if reps < 100 {
        return Err(Error::Invalid(format!("null test needs at least 100 replicates, got {reps}")));
    }
    if observed.len() != p {
        return Err(Error::Invalid(format!("{} observed congruences for {p} axes", observed.len())));
    }
    let null_samples: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, rep as u64);
            let mut a = rng::standard_normal_matrix(&mut rng, n, p);
            let mut b = rng::standard_normal_matrix(&mut rng, n, p);
            crate::mds::center_columns(&mut a);
            crate::mds::center_columns(&mut b);
            procrustes_fit(&a, &b, allow_scale).map(|r| r.congruence)
        })
        .collect::<Result<_>>()?;
    let mut p_values = Vec::with_capacity(p);
    let mut summary = NullSummary { mean: vec![], p95: vec![], p999: vec![] };
    for c in 0..p {
        let mut col: Vec<f64> = null_samples.iter().map(|s| s[c]).collect();
        let exceed = col.iter().filter(|&&v| v >= observed[c]).count();
        p_values.push((1 + exceed) as f64 / (1 + reps) as f64);
        col.sort_by(f64::total_cmp);
        summary.mean.push(col.iter().sum::<f64>() / reps as f64);
        summary.p95.push(quantile(&col, 0.95));
        summary.p999.push(quantile(&col, 0.999));
    }
    Ok(CongruenceNullTest {
        observed: observed.to_vec(),
        null_samples,
        p_values,
        summary,
    })
}

/// Conventional reading of a congruence coefficient: 0.85 to 0.94 is fair
/// similarity, 0.95 and above practically equal.
pub fn congruence_label(c: f64) -> &'static str {
    if c >= 0.95 {
        "equal"
    } else if c >= 0.85 {
        "fair"
    } else {
        "below fair"
    }
}

/// Procrustes fit plus significance of its congruences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub rotation: Vec<Vec<f64>>,
    pub scale: f64,
    pub translation: Vec<f64>,
    pub residual: f64,
    pub congruence: Vec<f64>,
    pub interpretation: Vec<String>,
    pub p_values: Vec<f64>,
    pub null_reps: usize,
    pub null_summary: NullSummary,
    pub transformed: Coordinates,
}

pub fn align(
    target: &[Vec<f64>],
    testee: &[Vec<f64>],
    allow_scale: bool,
    null_reps: usize,
    seed: u64,
) -> Result<AlignmentReport> {
    let fit = procrustes_fit(target, testee, allow_scale)?;
    let p = fit.congruence.len();
    let null = congruence_null_test(target.len(), p, null_reps, &fit.congruence, allow_scale, seed)?;
    Ok(AlignmentReport {
        interpretation: fit.congruence.iter().map(|&c| congruence_label(c).to_string()).collect(),
        rotation: fit.rotation,
        scale: fit.scale,
        translation: fit.translation,
        residual: fit.residual,
        congruence: fit.congruence,
        p_values: null.p_values,
        null_reps,
        null_summary: null.summary,
        transformed: fit.transformed,
    })
}
