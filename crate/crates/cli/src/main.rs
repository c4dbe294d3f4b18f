use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use squid_core::alignment::align;
use squid_core::corpus::{load_questionnaire, merge_variants, QuestionnaireSpec};
use squid_core::embed::{fetch_embeddings, load_embeddings, save_embeddings, EmbeddingSet, EndpointConfig};
use squid_core::figures::emit_figures;
use squid_core::matrix::MatrixKind;
use squid_core::mds::{configuration_from_csv, smacof, MdsInit, MdsOptions, MdsType, Ties};
use squid_core::pipeline::{load_report, run_pipeline, PipelineConfig};
use squid_core::psychometrics::{
    alpha_report, correlation_matrix, random_alpha_baseline, to_dissimilarity, DissimilarityMethod,
};
use squid_core::squid::{aggregate_dimensions, squid_transform};
use squid_core::{pvqrr, Error, SymmetricMatrix};

/// Questionnaire item embedding analysis.
#[derive(Parser)]
#[command(name = "squid", version)]
struct Cli {
    /// Run file (TOML) for `report`; endpoint settings for `embed`; input defaults elsewhere.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Without it results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch item embeddings from an endpoint (cached on disk).
    Embed {
        #[arg(long)]
        spec: PathBuf,
        /// Text variants to embed; defaults to all variants in the spec.
        #[arg(long)]
        variant: Vec<String>,
    },
    /// Subtract the questionnaire-mean embedding.
    Squid(InputArgs),
    /// Cronbach's alpha per dimension.
    Alpha {
        #[command(flatten)]
        input: InputArgs,
        /// Subtract the questionnaire mean first.
        #[arg(long)]
        squid: bool,
    },
    /// Alpha of mean-subtracted standard normal embeddings.
    Baseline {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 4096)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
    },
    /// Item and dimension Pearson similarity matrices.
    Similarity {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        squid: bool,
    },
    /// Multidimensional scaling of a labeled matrix.
    Mds {
        #[arg(long)]
        matrix: PathBuf,
        /// What the matrix holds; correlations are converted with --method.
        #[arg(long, value_enum, default_value_t = Kind::Correlation)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Method::OneMinusR)]
        method: Method,
        #[arg(long = "type", value_enum, default_value_t = Type::Ordinal)]
        mds_type: Type,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long)]
        secondary_ties: bool,
        /// Start from a seeded random configuration instead of classical scaling.
        #[arg(long)]
        random_init: bool,
    },
    /// Procrustes-fit a testee configuration onto a target and test congruence.
    Align {
        /// `label,x,y` CSV
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        testee: PathBuf,
        /// Rotation, reflection and translation only.
        #[arg(long)]
        no_scale: bool,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Full pipeline from a run file.
    Report,
    /// SVG figures from a report.json.
    Figures {
        #[arg(long)]
        report: PathBuf,
    },
    /// Print the built-in PVQ-RR spec template.
    Skeleton,
}

#[derive(Args)]
struct InputArgs {
    /// One file per text variant; several are averaged item by item.
    #[arg(long)]
    embeddings: Vec<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Correlation,
    Dissimilarity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    OneMinusR,
    Sqrt2OneMinusR,
}

#[derive(Clone, Copy, ValueEnum)]
enum Type {
    Ordinal,
    Ratio,
}

type CliResult<T = ()> = Result<T, Error>;

fn emit<T: Serialize>(value: &T, out: Option<&Path>, name: &str) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("serializes") + "\n";
    emit_text(&text, out, name)
}

fn emit_text(text: &str, out: Option<&Path>, name: &str) -> CliResult {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_config(cli: &Cli) -> CliResult<Option<PipelineConfig>> {
    cli.config.as_deref().map(PipelineConfig::load).transpose()
}

/// Spec plus merged embeddings, aligned to the spec's item order.
fn resolve_input(cli: &Cli, input: &InputArgs) -> CliResult<(QuestionnaireSpec, EmbeddingSet)> {
    let cfg = run_config(cli)?;
    let spec_path = input
        .spec
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.spec.clone()))
        .ok_or_else(|| Error::Invalid("--spec is required".into()))?;
    let files = if input.embeddings.is_empty() {
        cfg.map(|c| c.embeddings).unwrap_or_default()
    } else {
        input.embeddings.clone()
    };
    if files.is_empty() {
        return Err(Error::Invalid("--embeddings is required".into()));
    }
    let spec = load_questionnaire(&spec_path)?;
    let sets = files
        .iter()
        .map(|p| load_embeddings(p)?.align_to(&spec))
        .collect::<CliResult<Vec<_>>>()?;
    Ok((spec, merge_variants(&sets)?))
}

fn run(cli: &Cli) -> CliResult {
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Embed { spec, variant } => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Error::Invalid("embed needs --config <endpoint.toml>".into()))?;
            let endpoint = EndpointConfig::load(path)?;
            let spec = load_questionnaire(spec)?;
            let variants = if variant.is_empty() { spec.variants() } else { variant.clone() };
            let dir = out.unwrap_or(Path::new("."));
            fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
            let mut sets = Vec::new();
            for v in &variants {
                let set = fetch_embeddings(&endpoint, &spec, v)?;
                save_embeddings(&set, &dir.join(format!("{v}.jsonl")))?;
                sets.push(set);
            }
            if sets.len() > 1 {
                save_embeddings(&merge_variants(&sets)?, &dir.join("merged.jsonl"))?;
            }
            Ok(())
        }
        Command::Squid(input) => {
            let (_, set) = resolve_input(cli, input)?;
            emit_text(&squid_transform(&set)?.to_jsonl(), out, "squid_embeddings.jsonl")
        }
        Command::Alpha { input, squid } => {
            let (spec, set) = resolve_input(cli, input)?;
            let set = if *squid { squid_transform(&set)?.into_set() } else { set };
            emit(&alpha_report(&set, &spec)?, out, "alpha.json")
        }
        Command::Baseline { spec, d, reps } => {
            let spec = load_questionnaire(spec)?;
            emit(&random_alpha_baseline(&spec, *d, *reps, seed)?, out, "baseline.json")
        }
        Command::Similarity { input, squid } => {
            let (spec, set) = resolve_input(cli, input)?;
            let set = if *squid { squid_transform(&set)?.into_set() } else { set };
            let items = correlation_matrix(&set)?;
            let dims = correlation_matrix(&aggregate_dimensions(&set, &spec)?)?;
            match out {
                Some(_) => {
                    emit_text(&items.to_csv_string(), out, "item_similarity.csv")?;
                    emit_text(&dims.to_csv_string(), out, "dimension_similarity.csv")
                }
                None => emit_text(&dims.to_csv_string(), None, ""),
            }
        }
        Command::Mds { matrix, kind, method, mds_type, dims, max_iter, epsilon, secondary_ties, random_init } => {
            let raw = SymmetricMatrix::read_csv(matrix)?;
            let delta = match kind {
                Kind::Correlation => {
                    raw.validate(MatrixKind::Correlation, 1e-6)?;
                    let method = match method {
                        Method::OneMinusR => DissimilarityMethod::OneMinusR,
                        Method::Sqrt2OneMinusR => DissimilarityMethod::SqrtTwoOneMinusR,
                    };
                    to_dissimilarity(&raw, method)
                }
                Kind::Dissimilarity => raw,
            };
            let opts = MdsOptions {
                kind: match mds_type {
                    Type::Ordinal => MdsType::Ordinal,
                    Type::Ratio => MdsType::Ratio,
                },
                dims: *dims,
                max_iter: *max_iter,
                epsilon: *epsilon,
                ties: if *secondary_ties { Ties::Secondary } else { Ties::Primary },
                init: if *random_init { MdsInit::Random(seed) } else { MdsInit::Classical },
            };
            let conf = smacof(&delta, &opts)?;
            if out.is_some() {
                emit_text(&conf.to_csv(), out, "configuration.csv")?;
            }
            emit(&conf, out, "configuration.json")
        }
        Command::Align { target, testee, no_scale, reps } => {
            let read = |p: &Path| -> CliResult<_> {
                let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.into(), source: e })?;
                configuration_from_csv(&text, &p.display().to_string())
            };
            let (t_labels, t) = read(target)?;
            let (s_labels, s) = read(testee)?;
            // Testee rows follow the target's label order.
            let s = t_labels
                .iter()
                .map(|l| {
                    s_labels
                        .iter()
                        .position(|x| x == l)
                        .map(|i| s[i].clone())
                        .ok_or_else(|| Error::Invalid(format!("label {l:?} missing from testee")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            emit(&align(&t, &s, !no_scale, *reps, seed)?, out, "alignment.json")
        }
        Command::Report => {
            let mut cfg = run_config(cli)?.ok_or_else(|| Error::Invalid("report needs --config <run.toml>".into()))?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.output_dir = o.clone();
            }
            let report = run_pipeline(&cfg)?;
            emit_figures(&report, &cfg.output_dir)?;
            Ok(())
        }
        Command::Figures { report } => {
            let report = load_report(report)?;
            let dir = out.unwrap_or(Path::new("."));
            for p in emit_figures(&report, dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Skeleton => emit(&pvqrr::skeleton(), out, "questionnaire.json"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
