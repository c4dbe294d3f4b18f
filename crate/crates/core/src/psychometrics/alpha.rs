use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::QuestionnaireSpec;
use crate::embed::{random_embeddings_for, EmbeddingSet};
use crate::squid::squid_transform;
use crate::{rng, Error, Result, VectorRows};

/// Per-dimension Cronbach's alpha in questionnaire order, plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub alpha: IndexMap<String, f64>,
    pub mean_alpha: f64,
}

impl AlphaReport {
    fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        let alpha: IndexMap<String, f64> = pairs.into_iter().collect();
        let mean_alpha = alpha.values().sum::<f64>() / alpha.len() as f64;
        AlphaReport { alpha, mean_alpha }
    }
}

fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Cronbach's alpha for `k` items scored by the same `n` raters.
///
/// Here the "raters" of an embedding are its coordinates. Variances use the
/// population divisor; the sample divisor cancels in the ratio.
pub fn cronbach_alpha(items: &[&[f64]]) -> Result<f64> {
    let k = items.len();
    if k < 2 {
        return Err(Error::Invalid(format!("alpha needs at least 2 items, got {k}")));
    }
    let n = items[0].len();
    if n < 2 {
        return Err(Error::Invalid(format!("alpha needs at least 2 raters, got {n}")));
    }
    if items.iter().any(|v| v.len() != n) {
        return Err(Error::Invalid("items have different lengths".into()));
    }
    let mut total = vec![0.0; n];
    for v in items {
        for (t, x) in total.iter_mut().zip(v.iter()) {
            *t += x;
        }
    }
    let total_var = population_variance(&total);
    if !(total_var > 0.0) {
        return Err(Error::Degenerate(
            "total-score variance is zero, alpha is undefined".into(),
        ));
    }
    let item_var: f64 = items.iter().map(|v| population_variance(v)).sum();
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

fn dimension_alphas<S: VectorRows + ?Sized>(set: &S, spec: &QuestionnaireSpec) -> Result<Vec<f64>> {
    spec.dimensions
        .iter()
        .map(|d| {
            let rows = spec
                .items_of(&d.code)
                .map(|item| {
                    set.labels()
                        .iter()
                        .position(|l| *l == item.id)
                        .map(|i| set.row(i))
                        .ok_or_else(|| Error::Invalid(format!("embedding for item {:?} missing", item.id)))
                })
                .collect::<Result<Vec<_>>>()?;
            cronbach_alpha(&rows).map_err(|e| match e {
                Error::Degenerate(m) => Error::Degenerate(format!("dimension {}: {m}", d.code)),
                Error::Invalid(m) => Error::Invalid(format!("dimension {}: {m}", d.code)),
                other => other,
            })
        })
        .collect()
}

/// Alpha per dimension, treating each item vector as one item and the
/// embedding coordinates as raters. Mean subtraction is the caller's choice
/// and is visible in `set.provenance()`.
pub fn alpha_report(set: &EmbeddingSet, spec: &QuestionnaireSpec) -> Result<AlphaReport> {
    let alphas = dimension_alphas(set, spec)?;
    Ok(AlphaReport::from_pairs(spec.dimension_codes().into_iter().zip(alphas)))
}

/// Mean alpha of mean-subtracted standard normal embeddings over `reps`
/// replicates.
///
/// Replicate `i` draws from stream `i` of `seed`, so the result is the same
/// for any thread count.
pub fn random_alpha_baseline(spec: &QuestionnaireSpec, d: usize, reps: usize, seed: u64) -> Result<AlphaReport> {
    if reps == 0 {
        return Err(Error::Invalid("baseline needs at least one replicate".into()));
    }
    let ids = spec.item_ids();
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng::stream(seed, rep as u64);
            let raw = random_embeddings_for(ids.clone(), d, &mut rng)?;
            let treated = squid_transform(&raw)?;
            dimension_alphas(&treated, spec)
        })
        .collect::<Result<_>>()?;
    let k = spec.dimensions.len();
    let mut sums = vec![0.0; k];
    for alphas in &per_rep {
        for (s, a) in sums.iter_mut().zip(alphas) {
            *s += a;
        }
    }
    let inv = 1.0 / reps as f64;
    Ok(AlphaReport::from_pairs(
        spec.dimension_codes().into_iter().zip(sums.into_iter().map(|s| s * inv)),
    ))
}
