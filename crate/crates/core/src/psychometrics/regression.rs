use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::correlation::{fisher_ci, pearson, LabelPair};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n_pairs: usize,
    pub r: f64,
    /// 95% Fisher-z interval for `r`.
    pub ci: [f64; 2],
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl RegressionReport {
    /// Share of variance explained, as a whole percentage ("55%").
    pub fn percent_explained(&self) -> String {
        format!("{:.0}%", self.r2 * 100.0)
    }
}

/// Ordinary least squares of `y` on `x` over matching label pairs.
///
/// Pairs are matched by label regardless of orientation, so the two inputs
/// may come from differently ordered matrices. When |r| = 1 the interval
/// collapses to `[r, r]`; with fewer than 4 pairs it is `[-1, 1]`.
pub fn regress_similarities(x: &[LabelPair], y: &[LabelPair]) -> Result<RegressionReport> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "{} predictor pairs but {} response pairs",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Invalid("regression needs at least 3 pairs".into()));
    }
    let lookup: HashMap<(&str, &str), f64> = y.iter().map(|p| (p.key(), p.value)).collect();
    if lookup.len() != y.len() {
        return Err(Error::Invalid("response pairs contain duplicates".into()));
    }
    let ys = x
        .iter()
        .map(|p| {
            lookup.get(&p.key()).copied().ok_or_else(|| {
                Error::Invalid(format!("label pair ({}, {}) missing from response", p.a, p.b))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = x.iter().map(|p| p.value).collect();

    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("predictor is constant".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r = pearson(&xs, &ys)?;
    let ci = if r.abs() >= 1.0 {
        [r, r]
    } else if xs.len() < 4 {
        [-1.0, 1.0]
    } else {
        let (lo, hi) = fisher_ci(r, xs.len(), 0.95)?;
        [lo, hi]
    };
    Ok(RegressionReport {
        n_pairs: xs.len(),
        r,
        ci,
        slope,
        intercept,
        r2: r * r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(values: &[f64]) -> Vec<LabelPair> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| LabelPair { a: format!("a{i}"), b: format!("b{i}"), value: v })
            .collect()
    }

    #[test]
    fn exact_line() {
        let x = [0.1, -0.4, 0.9, 0.3, 0.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let rep = regress_similarities(&pairs(&x), &pairs(&y)).unwrap();
        assert!((rep.slope - 2.0).abs() < 1e-12);
        assert!((rep.intercept - 1.0).abs() < 1e-12);
        assert!((rep.r2 - 1.0).abs() < 1e-12);
        assert!(rep.ci[0] <= rep.r && rep.r <= rep.ci[1]);
    }

    #[test]
    fn reversed_pairs_still_match() {
        let x = pairs(&[0.1, 0.5, 0.2, 0.8]);
        let mut y = pairs(&[0.3, 0.4, 0.1, 0.9]);
        y.reverse();
        for p in &mut y {
            std::mem::swap(&mut p.a, &mut p.b);
        }
        let rep = regress_similarities(&x, &y).unwrap();
        let direct = regress_similarities(&x, &pairs(&[0.3, 0.4, 0.1, 0.9])).unwrap();
        assert_eq!(rep, direct);
    }

    #[test]
    fn mismatches_and_constants_fail() {
        let x = pairs(&[0.1, 0.5, 0.2]);
        let mut y = pairs(&[0.3, 0.4, 0.1]);
        y[1].a = "zz".into();
        assert!(regress_similarities(&x, &y).is_err());
        assert!(regress_similarities(&pairs(&[1.0, 1.0, 1.0]), &pairs(&[0.3, 0.4, 0.1])).is_err());
        assert!(regress_similarities(&pairs(&[1.0, 2.0]), &pairs(&[0.3, 0.4])).is_err());
    }

    #[test]
    fn percent_formatting() {
        let rep = RegressionReport { n_pairs: 171, r: 0.74, ci: [0.66, 0.80], slope: 1.0, intercept: 0.0, r2: 0.74 * 0.74 };
        assert_eq!(rep.percent_explained(), "55%");
    }
}
