//! End-to-end run: questionnaire and embeddings in, every table, matrix and
//! configuration out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{align, AlignmentReport};
use crate::corpus::{load_questionnaire, load_reference_matrix, merge_variants, QuestionnaireSpec};
use crate::embed::{fetch_embeddings, load_embeddings, EmbeddingSet, EndpointConfig};
use crate::matrix::MatrixKind;
use crate::mds::{pca_2d, smacof, MdsConfiguration, MdsOptions, PcaResult};
use crate::psychometrics::{
    alpha_report, correlation_matrix, random_alpha_baseline, regress_similarities, to_dissimilarity,
    vectorize_upper, AlphaReport, DissimilarityMethod, RegressionReport, SimilarityMatrix,
};
use crate::squid::{aggregate_dimensions, squid_transform};
use crate::{rng, Error, Result};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub d: usize,
    /// 0 disables the random baseline.
    pub reps: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings { d: 4096, reps: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullTestSettings {
    pub reps: usize,
}

impl Default for NullTestSettings {
    fn default() -> Self {
        NullTestSettings { reps: 1000 }
    }
}

/// Run file contents. Relative paths are resolved against the run file's
/// directory by [`PipelineConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub spec: PathBuf,
    /// One embedding file per text variant; averaged item by item.
    #[serde(default)]
    pub embeddings: Vec<PathBuf>,
    /// Endpoint settings (TOML) used when `embeddings` is empty.
    #[serde(default)]
    pub endpoint: Option<PathBuf>,
    /// Variants to fetch from the endpoint; defaults to every variant in the spec.
    #[serde(default)]
    pub variants: Vec<String>,
    /// Human dimension correlation matrix (labeled CSV).
    #[serde(default)]
    pub reference: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "yes")]
    pub squid: bool,
    #[serde(default)]
    pub dissimilarity: DissimilarityMethod,
    #[serde(default)]
    pub mds: MdsOptions,
    #[serde(default = "yes")]
    pub allow_scale: bool,
    #[serde(default)]
    pub baseline: BaselineSettings,
    #[serde(default)]
    pub null_test: NullTestSettings,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    /// Minimal configuration for a spec and embedding files.
    pub fn new(spec: impl Into<PathBuf>, embeddings: Vec<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            spec: spec.into(),
            embeddings,
            endpoint: None,
            variants: vec![],
            reference: None,
            output_dir: output_dir.into(),
            squid: true,
            dissimilarity: DissimilarityMethod::default(),
            mds: MdsOptions::default(),
            allow_scale: true,
            baseline: BaselineSettings::default(),
            null_test: NullTestSettings::default(),
            seed: 0,
        }
    }

    pub fn from_toml_str(text: &str, context: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(context, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.spec);
        cfg.embeddings.iter_mut().for_each(resolve);
        cfg.endpoint.iter_mut().for_each(resolve);
        cfg.reference.iter_mut().for_each(resolve);
        resolve(&mut cfg.output_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.mds.validate()?;
        if self.embeddings.is_empty() && self.endpoint.is_none() {
            return Err(Error::Invalid("config lists neither embeddings nor an endpoint".into()));
        }
        let mut inputs = vec![&self.spec];
        inputs.extend(&self.embeddings);
        inputs.extend(&self.endpoint);
        inputs.extend(&self.reference);
        for p in inputs {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
            }
        }
        Ok(())
    }

    fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_hash(path: &Path) -> Result<String> {
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub config_hash: String,
    /// File path to SHA-256 of its contents.
    pub input_hashes: IndexMap<String, String>,
    pub seed: u64,
    pub squid: bool,
    pub model: Option<String>,
    /// Seconds since the Unix epoch; the only field that varies between
    /// otherwise identical runs.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSimilarity {
    pub a: String,
    pub b: String,
    pub embedding: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: RunProvenance,
    pub dimensions: Vec<String>,
    pub alpha: AlphaReport,
    pub baseline: Option<AlphaReport>,
    pub item_similarity: SimilarityMatrix,
    pub dimension_similarity: SimilarityMatrix,
    pub reference_similarity: Option<SimilarityMatrix>,
    pub pair_similarities: Vec<PairSimilarity>,
    pub regression: Option<RegressionReport>,
    pub mds_embeddings: MdsConfiguration,
    pub mds_reference: Option<MdsConfiguration>,
    pub pca: PcaResult,
    pub alignment: Option<AlignmentReport>,
}

impl RunReport {
    /// Report JSON with the timestamp zeroed, for comparing runs.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut r = self.clone();
        r.provenance.timestamp = 0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }
}

fn obtain_embeddings(config: &PipelineConfig, spec: &QuestionnaireSpec) -> Result<(Vec<EmbeddingSet>, Option<String>)> {
    if !config.embeddings.is_empty() {
        let sets = config
            .embeddings
            .iter()
            .map(|p| load_embeddings(p)?.align_to(spec))
            .collect::<Result<Vec<_>>>()?;
        return Ok((sets, None));
    }
    let path = config.endpoint.as_ref().expect("validated: endpoint present");
    let endpoint = EndpointConfig::load(path)?;
    let variants = if config.variants.is_empty() { spec.variants() } else { config.variants.clone() };
    let sets = variants
        .iter()
        .map(|v| fetch_embeddings(&endpoint, spec, v))
        .collect::<Result<Vec<_>>>()?;
    Ok((sets, Some(endpoint.model)))
}

/// Runs every stage in memory; nothing is written.
pub fn analyze(config: &PipelineConfig) -> Result<RunReport> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let spec = load_questionnaire(&config.spec).map_err(|e| e.in_stage("corpus"))?;
    let codes = spec.dimension_codes();

    let mut input_hashes = IndexMap::new();
    let mut inputs = vec![&config.spec];
    inputs.extend(&config.embeddings);
    inputs.extend(&config.endpoint);
    inputs.extend(&config.reference);
    for p in inputs {
        input_hashes.insert(p.display().to_string(), file_hash(p).map_err(|e| e.in_stage("corpus"))?);
    }

    let (sets, model) = obtain_embeddings(config, &spec).map_err(|e| e.in_stage("embed"))?;
    let merged = merge_variants(&sets).map_err(|e| e.in_stage("merge"))?;
    let items = if config.squid {
        squid_transform(&merged).map_err(|e| e.in_stage("squid"))?.into_set()
    } else {
        merged
    };
    let dims = aggregate_dimensions(&items, &spec).map_err(|e| e.in_stage("aggregate"))?;

    let alpha = alpha_report(&items, &spec).map_err(|e| e.in_stage("alpha"))?;
    let baseline = if config.baseline.reps > 0 {
        let seed = rng::derive_seed(config.seed, "baseline");
        Some(random_alpha_baseline(&spec, config.baseline.d, config.baseline.reps, seed).map_err(|e| e.in_stage("baseline"))?)
    } else {
        None
    };

    let item_similarity = correlation_matrix(&items).map_err(|e| e.in_stage("similarity"))?;
    let dimension_similarity = correlation_matrix(&dims).map_err(|e| e.in_stage("similarity"))?;

    let reference_similarity = config
        .reference
        .as_ref()
        .map(|p| load_reference_matrix(p, &codes, MatrixKind::Correlation))
        .transpose()
        .map_err(|e| e.in_stage("reference"))?;

    let (pair_similarities, regression) = match &reference_similarity {
        Some(reference) => {
            let x = vectorize_upper(&dimension_similarity);
            let y = vectorize_upper(reference);
            let reg = regress_similarities(&x, &y).map_err(|e| e.in_stage("regression"))?;
            let pairs = x
                .into_iter()
                .zip(y)
                .map(|(e, h)| PairSimilarity { a: e.a, b: e.b, embedding: e.value, reference: h.value })
                .collect();
            (pairs, Some(reg))
        }
        None => (vec![], None),
    };

    let mds_embeddings = smacof(&to_dissimilarity(&dimension_similarity, config.dissimilarity), &config.mds)
        .map_err(|e| e.in_stage("mds"))?;
    let mds_reference = reference_similarity
        .as_ref()
        .map(|r| smacof(&to_dissimilarity(r, config.dissimilarity), &config.mds))
        .transpose()
        .map_err(|e| e.in_stage("mds"))?;
    let pca = pca_2d(&dims, true, true).map_err(|e| e.in_stage("pca"))?;

    let alignment = mds_reference
        .as_ref()
        .map(|human| {
            align(
                &human.coordinates,
                &mds_embeddings.coordinates,
                config.allow_scale,
                config.null_test.reps,
                rng::derive_seed(config.seed, "null-test"),
            )
        })
        .transpose()
        .map_err(|e| e.in_stage("alignment"))?;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    Ok(RunReport {
        provenance: RunProvenance {
            config_hash: config.hash(),
            input_hashes,
            seed: config.seed,
            squid: config.squid,
            model,
            timestamp,
        },
        dimensions: codes,
        alpha,
        baseline,
        item_similarity,
        dimension_similarity,
        reference_similarity,
        pair_similarities,
        regression,
        mds_embeddings,
        mds_reference,
        pca,
        alignment,
    })
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s.into_bytes()
}

fn pairs_csv(pairs: &[PairSimilarity]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["a", "b", "embedding", "reference"]).expect("in-memory write");
    for p in pairs {
        w.write_record([p.a.clone(), p.b.clone(), p.embedding.to_string(), p.reference.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Serialized outputs of a report, as (file name, contents).
pub fn report_files(report: &RunReport) -> Vec<(&'static str, Vec<u8>)> {
    let mut files = vec![
        ("report.json", json(report)),
        ("alpha.json", json(&report.alpha)),
        ("item_similarity.csv", report.item_similarity.to_csv_string().into_bytes()),
        ("dimension_similarity.csv", report.dimension_similarity.to_csv_string().into_bytes()),
        ("mds_embeddings.csv", report.mds_embeddings.to_csv().into_bytes()),
        ("mds_embeddings.json", json(&report.mds_embeddings)),
        ("pca.json", json(&report.pca)),
    ];
    if let Some(b) = &report.baseline {
        files.push(("baseline.json", json(b)));
    }
    if let Some(r) = &report.reference_similarity {
        files.push(("reference_similarity.csv", r.to_csv_string().into_bytes()));
    }
    if let Some(r) = &report.regression {
        files.push(("regression.json", json(r)));
        files.push(("pair_similarities.csv", pairs_csv(&report.pair_similarities)));
    }
    if let Some(m) = &report.mds_reference {
        files.push(("mds_reference.csv", m.to_csv().into_bytes()));
        files.push(("mds_reference.json", json(m)));
    }
    if let Some(a) = &report.alignment {
        files.push(("alignment.json", json(a)));
    }
    files
}

/// Writes `files` into `dir`; on failure removes whatever was written.
pub(crate) fn write_all(dir: &Path, files: &[(impl AsRef<Path>, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(Error::io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

/// Runs the pipeline and writes every output into `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    let report = analyze(config)?;
    write_all(&config.output_dir, &report_files(&report)).map_err(|e| e.in_stage("write"))?;
    Ok(report)
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}
