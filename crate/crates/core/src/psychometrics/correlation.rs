use serde::{Deserialize, Serialize};

use crate::matrix::SymmetricMatrix;
use crate::{Error, Result, VectorRows};

/// Pearson matrix: unit diagonal, entries in [-1, 1].
pub type SimilarityMatrix = SymmetricMatrix;

fn centered_unit(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        Some(c.into_iter().map(|v| v / norm).collect())
    } else {
        None
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "pearson: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("pearson needs at least 2 observations".into()));
    }
    let cx = centered_unit(x).ok_or_else(|| Error::Degenerate("pearson: first vector is constant".into()))?;
    let cy = centered_unit(y).ok_or_else(|| Error::Degenerate("pearson: second vector is constant".into()))?;
    Ok(dot(&cx, &cy).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlation between rows, computed over coordinates.
pub fn correlation_matrix<S: VectorRows + ?Sized>(rows: &S) -> Result<SimilarityMatrix> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::Invalid("correlation matrix needs at least 2 rows".into()));
    }
    if rows.dim() < 2 {
        return Err(Error::Invalid("correlation needs vectors of length >= 2".into()));
    }
    let unit = (0..n)
        .map(|i| {
            centered_unit(rows.row(i)).ok_or_else(|| {
                Error::Degenerate(format!("row {:?} is constant", rows.labels()[i]))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = 1.0;
        for j in (i + 1)..n {
            let r = dot(&unit[i], &unit[j]).clamp(-1.0, 1.0);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    SymmetricMatrix::new(rows.labels().to_vec(), m)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissimilarityMethod {
    /// d = 1 - r
    #[default]
    OneMinusR,
    /// d = sqrt(2 (1 - r)), the Euclidean distance between standardized vectors.
    #[serde(rename = "sqrt-2-one-minus-r")]
    SqrtTwoOneMinusR,
}

pub fn to_dissimilarity(m: &SimilarityMatrix, method: DissimilarityMethod) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(m.labels().to_vec(), |i, j| {
        if i == j {
            return 0.0;
        }
        let d = (1.0 - m.get(i, j)).max(0.0);
        match method {
            DissimilarityMethod::OneMinusR => d,
            DissimilarityMethod::SqrtTwoOneMinusR => (2.0 * d).sqrt(),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPair {
    pub a: String,
    pub b: String,
    pub value: f64,
}

impl LabelPair {
    /// Orientation-free key for matching pairs across matrices.
    pub fn key(&self) -> (&str, &str) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }
}

/// Strict upper triangle, row-major: (1,2), (1,3), ..., (2,3), ...
pub fn vectorize_upper(m: &SymmetricMatrix) -> Vec<LabelPair> {
    let n = m.n();
    let labels = m.labels();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(LabelPair {
                a: labels[i].clone(),
                b: labels[j].clone(),
                value: m.get(i, j),
            });
        }
    }
    out
}

/// Standard normal quantile (Wichura's AS241, about 1e-16 relative error).
pub(crate) fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 { -x } else { x }
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_5, 133.141_667_891_784_38, 1_971.590_950_306_551_4, 13_731.693_765_509_461,
    45_921.953_931_549_87, 67_265.770_927_008_7, 33_430.575_583_588_13, 2_509.080_928_730_122_7,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0, 42.313_330_701_600_91, 687.187_007_492_057_9, 5_394.196_021_424_751,
    21_213.794_301_586_6, 39_307.895_800_092_71, 28_729.085_735_721_943, 5_226.495_278_852_545,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_5, 4.630_337_846_156_546, 5.769_497_221_460_691, 3.647_848_324_763_204_5,
    1.270_458_252_452_368_4, 0.241_780_725_177_450_6, 0.022_723_844_989_269_184, 7.745_450_142_783_414e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0, 2.053_191_626_637_759, 1.676_384_830_183_803_8, 0.689_767_334_985_1,
    0.148_103_976_427_480_08, 0.015_198_666_563_616_457, 5.475_938_084_995_345e-4, 1.050_750_071_644_416_9e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103, 5.463_784_911_164_114, 1.784_826_539_917_291_3, 0.296_560_571_828_504_9,
    0.026_532_189_526_576_124, 0.001_242_660_947_388_078_4, 2.711_555_568_743_487_6e-5, 2.010_334_399_292_288_1e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0, 0.599_832_206_555_888, 0.136_929_880_922_735_8, 0.014_875_361_290_850_615,
    7.868_691_311_456_133e-4, 1.846_318_317_510_054_8e-5, 1.421_511_758_316_446e-7, 2.043_131_005_508_869_4e-15,
];

/// Fisher-z confidence interval for a correlation `r` from `n` pairs.
pub fn fisher_ci(r: f64, n: usize, level: f64) -> Result<(f64, f64)> {
    if !(r.abs() < 1.0) {
        return Err(Error::Invalid(format!("fisher interval needs |r| < 1, got {r}")));
    }
    if n < 4 {
        return Err(Error::Invalid(format!("fisher interval needs n >= 4, got {n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let center = r.atanh();
    let half = z / ((n - 3) as f64).sqrt();
    Ok(((center - half).tanh(), (center + half).tanh()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingSet;

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        // cov 1 (population), sds sqrt(2/3) and sqrt(14/9).
        let want = 1.0 / ((2.0f64 / 3.0).sqrt() * (14.0f64 / 9.0).sqrt());
        assert!((pearson(&x, &[1.0, 2.0, 4.0]).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.981980506).abs() < 1e-9);
    }

    #[test]
    fn pearson_rejects_constants() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn correlation_matrix_examples() {
        let v = vec![0.3, -1.0, 2.0, 0.5];
        let s = EmbeddingSet::new(vec!["a".into(), "b".into()], vec![v.clone(), v.clone()]).unwrap();
        let m = correlation_matrix(&s).unwrap();
        assert!(m.rows().iter().flatten().all(|x| (x - 1.0).abs() < 1e-12));
        let flipped: Vec<f64> = v.iter().map(|x| -x + 7.0).collect();
        let s = EmbeddingSet::new(vec!["a".into(), "b".into()], vec![v, flipped]).unwrap();
        assert!((correlation_matrix(&s).unwrap().get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_row_is_named() {
        let s = EmbeddingSet::new(
            vec!["a".into(), "flat".into()],
            vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]],
        )
        .unwrap();
        let err = correlation_matrix(&s).unwrap_err();
        assert!(err.to_string().contains("flat"));
    }

    #[test]
    fn dissimilarity_endpoints() {
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string(), "d".to_string()];
        let r = [[1.0, 1.0, -1.0, 0.5], [1.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 1.0, 0.0], [0.5, 0.0, 0.0, 1.0]];
        let m = SymmetricMatrix::from_fn(labels, |i, j| r[i][j]);
        let d1 = to_dissimilarity(&m, DissimilarityMethod::OneMinusR);
        let d2 = to_dissimilarity(&m, DissimilarityMethod::SqrtTwoOneMinusR);
        assert_eq!((d1.get(0, 1), d2.get(0, 1)), (0.0, 0.0));
        assert_eq!((d1.get(0, 2), d2.get(0, 2)), (2.0, 2.0));
        assert_eq!((d1.get(0, 3), d2.get(0, 3)), (0.5, 1.0));
        assert!((0..4).all(|i| d1.get(i, i) == 0.0 && d2.get(i, i) == 0.0));
    }

    #[test]
    fn upper_triangle_order() {
        let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let m = SymmetricMatrix::from_fn(labels, |i, j| (i + j) as f64);
        let pairs: Vec<(String, String)> = vectorize_upper(&m).into_iter().map(|p| (p.a, p.b)).collect();
        let want = [("x", "y"), ("x", "z"), ("y", "z")];
        assert_eq!(pairs.len(), 3);
        for (got, w) in pairs.iter().zip(want) {
            assert_eq!((got.0.as_str(), got.1.as_str()), w);
        }
        let two = SymmetricMatrix::from_fn(vec!["p".into(), "q".into()], |_, _| 0.0);
        assert_eq!(vectorize_upper(&two).len(), 1);
    }

    #[test]
    fn normal_quantiles() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(0.5)).abs() < 1e-16);
        assert!((normal_quantile(0.001) + 3.090_232_306_167_813_5).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-10);
    }

    #[test]
    fn fisher_interval_examples() {
        let (lo, hi) = fisher_ci(0.74, 171, 0.95).unwrap();
        assert!((lo - 0.664).abs() < 5e-4 && (hi - 0.801).abs() < 5e-4, "{lo} {hi}");
        let (lo, hi) = fisher_ci(0.5, 30, 0.95).unwrap();
        assert!((lo - 0.170).abs() < 5e-4 && (hi - 0.729).abs() < 5e-4, "{lo} {hi}");
        let (lo, hi) = fisher_ci(0.0, 50, 0.9).unwrap();
        assert!((lo + hi).abs() < 1e-15);
        assert!(fisher_ci(1.0, 50, 0.95).is_err());
        assert!(fisher_ci(0.3, 3, 0.95).is_err());
    }
}
