#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use squid_core::corpus::{Dimension, ItemSpec, QuestionnaireSpec};
use squid_core::embed::{save_embeddings, EmbeddingSet};
use squid_core::{rng, SymmetricMatrix};

pub const N_DIMS: usize = 19;
pub const PER_DIM: usize = 3;

pub fn angle(k: usize) -> f64 {
    TAU * k as f64 / N_DIMS as f64
}

/// 19 dimensions with 3 items each, dimension-major item order.
pub fn circumplex_spec() -> QuestionnaireSpec {
    let dimensions = (0..N_DIMS)
        .map(|k| Dimension { code: format!("V{k:02}"), name: format!("Value {k}") })
        .collect();
    let items = (0..N_DIMS * PER_DIM)
        .map(|i| ItemSpec {
            id: format!("q{i:02}"),
            dimension: format!("V{:02}", i / PER_DIM),
            texts: [("female".to_string(), format!("item {i} (f)")), ("male".to_string(), format!("item {i} (m)"))]
                .into_iter()
                .collect(),
        })
        .collect();
    QuestionnaireSpec::new(dimensions, items).unwrap()
}

/// Items on a circle in two coordinates, plus a large shared offset and
/// isotropic noise.
pub fn circumplex_embeddings(d: usize, noise: f64, seed: u64) -> EmbeddingSet {
    let mut r = rng::seeded(seed);
    let offset: Vec<f64> = (0..d).map(|_| 5.0 + r.sample::<f64, _>(StandardNormal)).collect();
    let ids = circumplex_spec().item_ids();
    let rows = (0..ids.len())
        .map(|i| {
            let t = angle(i / PER_DIM);
            let mut v: Vec<f64> = offset.iter().map(|o| o + noise * r.sample::<f64, _>(StandardNormal)).collect();
            v[0] += 3.0 * t.cos();
            v[1] += 3.0 * t.sin();
            v
        })
        .collect();
    EmbeddingSet::new(ids, rows).unwrap()
}

/// Circular human correlation matrix over the 19 dimension codes.
pub fn circumplex_reference() -> SymmetricMatrix {
    let labels: Vec<String> = (0..N_DIMS).map(|k| format!("V{k:02}")).collect();
    SymmetricMatrix::from_fn(labels, |i, j| {
        if i == j {
            1.0
        } else {
            0.05 + 0.6 * (angle(i) - angle(j)).cos()
        }
    })
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub spec: PathBuf,
    pub embeddings: Vec<PathBuf>,
    pub reference: PathBuf,
}

impl Fixture {
    pub fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

/// Spec, two variant embedding files, and a reference matrix on disk.
pub fn write_fixture(d: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let spec = root.join("spec.json");
    std::fs::write(&spec, circumplex_spec().to_json_pretty()).unwrap();
    let embeddings = vec![root.join("female.jsonl"), root.join("male.csv")];
    save_embeddings(&circumplex_embeddings(d, 0.4, 1), &embeddings[0]).unwrap();
    save_embeddings(&circumplex_embeddings(d, 0.4, 2), &embeddings[1]).unwrap();
    let reference = root.join("reference.csv");
    circumplex_reference().write_csv(&reference).unwrap();
    Fixture { dir, spec, embeddings, reference }
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

pub fn euclidean(points: &[Vec<f64>]) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(labels(points.len()), |i, j| dist(&points[i], &points[j]))
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn uniform_points(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::seeded(seed);
    (0..n).map(|_| (0..p).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}
