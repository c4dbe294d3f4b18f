mod common;

use common::{euclidean, labels, uniform_points};
use proptest::prelude::*;
use rand::Rng;
use squid_core::alignment::{congruence, procrustes_fit};
use squid_core::mds::{classical_init, isotonic_fit, pca_2d, smacof, stress1, MdsInit, MdsOptions, MdsType};
use squid_core::{rng, SymmetricMatrix};

fn random_dissimilarities(n: usize, seed: u64) -> SymmetricMatrix {
    let mut r = rng::seeded(seed);
    let upper: Vec<f64> = (0..n * n).map(|_| r.random_range(0.05..2.0)).collect();
    SymmetricMatrix::from_fn(labels(n), |i, j| if i == j { 0.0 } else { upper[i.min(j) * n + i.max(j)] })
}

/// Least-squares monotone fit by the max-min formula.
fn isotonic_oracle(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let avg = |j: usize, k: usize| {
        let sw: f64 = w[j..=k].iter().sum();
        (j..=k).map(|t| w[t] * y[t]).sum::<f64>() / sw
    };
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| (i..n).map(|k| avg(j, k)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[test]
fn isotonic_matches_oracle_on_every_grid_sequence() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for n in 1..=6usize {
        for code in 0..grid.len().pow(n as u32) {
            let mut c = code;
            let y: Vec<f64> = (0..n)
                .map(|_| {
                    let v = grid[c % grid.len()];
                    c /= grid.len();
                    v
                })
                .collect();
            for w in [vec![1.0; n], (0..n).map(|i| 1.0 + (i % 2) as f64).collect()] {
                let got = isotonic_fit(&y, &w);
                let want = isotonic_oracle(&y, &w);
                for (g, e) in got.iter().zip(&want) {
                    assert!((g - e).abs() < 1e-9, "y={y:?} w={w:?}: {got:?} vs {want:?}");
                }
            }
        }
    }
}

#[test]
fn stress_trace_never_rises() {
    for seed in 0..200u64 {
        let n = 4 + (seed as usize % 12);
        let d = random_dissimilarities(n, seed);
        let kind = if seed % 2 == 0 { MdsType::Ordinal } else { MdsType::Ratio };
        let conf = smacof(&d, &MdsOptions { kind, ..MdsOptions::default() }).unwrap();
        for w in conf.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {} -> {}", w[0], w[1]);
        }
        assert!((0.0..=1.0).contains(&conf.stress));
        for c in 0..2 {
            let mean: f64 = conf.coordinates.iter().map(|r| r[c]).sum::<f64>() / n as f64;
            assert!(mean.abs() < 1e-9);
        }
    }
}

#[test]
fn rigid_motion_leaves_stress_unchanged() {
    let pts = uniform_points(12, 2, 5);
    let (s, c) = (0.6f64.sin(), 0.6f64.cos());
    let moved: Vec<Vec<f64>> = pts.iter().map(|p| vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.0]).collect();
    let mut noisy = euclidean(&pts);
    let mut noisy_moved = euclidean(&moved);
    // Break exact embeddability the same way in both.
    for (i, j, f) in [(0, 1, 1.3), (2, 7, 0.6), (4, 9, 1.1)] {
        for m in [&mut noisy, &mut noisy_moved] {
            let mut rows = m.rows().to_vec();
            rows[i][j] *= f;
            rows[j][i] = rows[i][j];
            *m = SymmetricMatrix::new(labels(12), rows).unwrap();
        }
    }
    for opts in [MdsOptions::default(), MdsOptions::ratio()] {
        let a = smacof(&noisy, &opts).unwrap();
        let b = smacof(&noisy_moved, &opts).unwrap();
        assert!((a.stress - b.stress).abs() < 1e-9, "{} vs {}", a.stress, b.stress);
    }
}

#[test]
fn ordinal_output_depends_only_on_order() {
    let transforms: [fn(f64) -> f64; 4] = [|x| x.powi(3), |x| x.sqrt(), |x| x.exp(), |x| (5.0 * x).ln_1p()];
    for seed in 0..10u64 {
        let d = random_dissimilarities(8 + seed as usize, 100 + seed);
        let base = smacof(&d, &MdsOptions::default()).unwrap();
        for f in transforms {
            let t = SymmetricMatrix::from_fn(labels(d.n()), |i, j| if i == j { 0.0 } else { f(d.get(i, j)) });
            let conf = smacof(&t, &MdsOptions::default()).unwrap();
            let fit = procrustes_fit(&base.coordinates, &conf.coordinates, true).unwrap();
            for c in congruence(&base.coordinates, &fit.transformed).unwrap() {
                assert!(c > 0.999, "seed {seed}: {c}");
            }
            assert!((conf.stress - base.stress).abs() < 1e-6);
        }
    }
}

#[test]
fn classical_scaling_is_exact_for_euclidean_input() {
    for seed in 0..20 {
        let pts = uniform_points(6 + seed as usize, 2, seed);
        let d = euclidean(&pts);
        let x = classical_init(&d, 2).unwrap();
        assert!(stress1(&x, &d).unwrap() < 1e-9);
    }
}

#[test]
fn unit_square_comes_back() {
    let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
    let conf = smacof(&euclidean(&sq), &MdsOptions::ratio()).unwrap();
    let mut got: Vec<f64> = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            got.push(common::dist(&conf.coordinates[i], &conf.coordinates[j]));
        }
    }
    got.sort_by(f64::total_cmp);
    let want = [1.0, 1.0, 1.0, 1.0, 2f64.sqrt(), 2f64.sqrt()];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-9, "{got:?}");
    }
}

#[test]
fn random_start_is_seeded() {
    let d = random_dissimilarities(9, 77);
    let opts = MdsOptions { init: MdsInit::Random(4), ..MdsOptions::default() };
    assert_eq!(smacof(&d, &opts).unwrap(), smacof(&d, &opts).unwrap());
}

#[test]
fn pca_of_planar_points_explains_everything() {
    let pts: Vec<Vec<f64>> = uniform_points(10, 2, 8)
        .into_iter()
        .map(|p| vec![p[0], p[1], p[0] - 2.0 * p[1], 0.5 * p[0]])
        .collect();
    let set = squid_core::embed::EmbeddingSet::new(labels(10), pts).unwrap();
    let pca = pca_2d(&set, true, false).unwrap();
    assert!((pca.explained.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isotonic_output_is_monotone_and_mean_preserving(y in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let w = vec![1.0; y.len()];
        let fit = isotonic_fit(&y, &w);
        for pair in fit.windows(2) {
            prop_assert!(pair[0] <= pair[1] + 1e-12);
        }
        let s0: f64 = y.iter().sum();
        let s1: f64 = fit.iter().sum();
        prop_assert!((s0 - s1).abs() < 1e-9);
    }
}
