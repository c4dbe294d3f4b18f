use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn squid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squid")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

/// Four dimensions on a circle, three items each, d = 8.
struct Inputs {
    dir: tempfile::TempDir,
}

impl Inputs {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let dims = ["A", "B", "C", "D"];
        let items: Vec<Value> = (0..12)
            .map(|i| json!({"id": format!("i{i}"), "dimension": dims[i / 3], "texts": {"female": format!("text {i}")}}))
            .collect();
        let spec = json!({
            "dimensions": dims.iter().map(|d| json!({"code": d, "name": format!("dim {d}")})).collect::<Vec<_>>(),
            "items": items,
        });
        fs::write(dir.path().join("q.json"), spec.to_string()).unwrap();

        let mut lines = String::new();
        for i in 0..12 {
            let t = std::f64::consts::TAU * (i / 3) as f64 / 4.0;
            let v: Vec<f64> = (0..8)
                .map(|k| 2.0 + 0.1 * ((i * 7 + k * 3) % 5) as f64 + if k == 0 { t.cos() } else if k == 1 { t.sin() } else { 0.0 })
                .collect();
            lines += &format!("{}\n", json!({"id": format!("i{i}"), "vector": v}));
        }
        fs::write(dir.path().join("e.jsonl"), lines).unwrap();

        let reference = ",A,B,C,D\nA,1,0.4,-0.3,0.4\nB,0.4,1,0.4,-0.3\nC,-0.3,0.4,1,0.4\nD,0.4,-0.3,0.4,1\n";
        fs::write(dir.path().join("ref.csv"), reference).unwrap();
        Inputs { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&squid(&["--help"])), 0);
    assert_eq!(code(&squid(&["--version"])), 0);
    assert_eq!(code(&squid(&["mds", "--help"])), 0);
}

#[test]
fn unknown_flag_prints_usage_and_exits_1() {
    let o = squid(&["alpha", "--bogus"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&squid(&[])), 1);
}

#[test]
fn alpha_report_on_stdout() {
    let io = Inputs::new();
    let v = stdout_json(&squid(&["alpha", "--embeddings", &io.arg("e.jsonl"), "--spec", &io.arg("q.json"), "--squid"]));
    let alpha = v["alpha"].as_object().unwrap();
    assert_eq!(alpha.keys().collect::<Vec<_>>(), ["A", "B", "C", "D"]);
    let mean = alpha.values().map(|a| a.as_f64().unwrap()).sum::<f64>() / 4.0;
    assert!((v["mean_alpha"].as_f64().unwrap() - mean).abs() < 1e-12);
}

#[test]
fn baseline_is_seeded() {
    let io = Inputs::new();
    let args = ["baseline", "--spec", &io.arg("q.json"), "--d", "64", "--reps", "20", "--seed", "7"];
    let a = squid(&args);
    let b = squid(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout_json(&a)["mean_alpha"].as_f64().unwrap() < 0.5);
}

#[test]
fn missing_input_is_io_error() {
    let io = Inputs::new();
    let o = squid(&["alpha", "--embeddings", &io.arg("absent.jsonl"), "--spec", &io.arg("q.json")]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.jsonl"));
}

#[test]
fn invalid_spec_is_validation_error() {
    let io = Inputs::new();
    fs::write(io.path("bad.json"), r#"{"dimensions":[{"code":"A","name":"a"}],"items":[{"id":"x","dimension":"A","texts":{"f":"t"}}]}"#).unwrap();
    let o = squid(&["alpha", "--embeddings", &io.arg("e.jsonl"), "--spec", &io.arg("bad.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn similarity_and_squid_write_files() {
    let io = Inputs::new();
    let out = io.arg("sim");
    let o = squid(&["similarity", "--embeddings", &io.arg("e.jsonl"), "--spec", &io.arg("q.json"), "--squid", "--out", &out]);
    assert_eq!(code(&o), 0);
    assert!(io.path("sim/item_similarity.csv").is_file());
    assert!(fs::read_to_string(io.path("sim/dimension_similarity.csv")).unwrap().starts_with(",A,B,C,D"));

    let o = squid(&["squid", "--embeddings", &io.arg("e.jsonl"), "--spec", &io.arg("q.json"), "--out", &out]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(io.path("sim/squid_embeddings.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn mds_then_align() {
    let io = Inputs::new();
    let o = squid(&["mds", "--matrix", &io.arg("ref.csv"), "--out", &io.arg("m1"), "--type", "ratio"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let conf: Value = serde_json::from_str(&fs::read_to_string(io.path("m1/configuration.json")).unwrap()).unwrap();
    assert_eq!(conf["labels"].as_array().unwrap().len(), 4);

    let csv = io.arg("m1/configuration.csv");
    let v = stdout_json(&squid(&["align", "--target", &csv, "--testee", &csv, "--reps", "100"]));
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["null_reps"], 100);
}

#[test]
fn mds_rejects_non_correlation_input() {
    let io = Inputs::new();
    fs::write(io.path("bad.csv"), ",A,B,C\nA,0,1,2\nB,1,0,1\nC,2,1,0\n").unwrap();
    assert_eq!(code(&squid(&["mds", "--matrix", &io.arg("bad.csv")])), 1);
    assert_eq!(code(&squid(&["mds", "--matrix", &io.arg("bad.csv"), "--kind", "dissimilarity"])), 0);
}

fn write_run_file(io: &Inputs) -> PathBuf {
    let run = io.path("run.toml");
    fs::write(
        &run,
        "spec = \"q.json\"\nembeddings = [\"e.jsonl\"]\nreference = \"ref.csv\"\noutput_dir = \"out\"\n\n[null_test]\nreps = 100\n",
    )
    .unwrap();
    run
}

#[test]
fn report_and_figures() {
    let io = Inputs::new();
    let run = write_run_file(&io);
    let o = squid(&["report", "--config", run.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = io.path("out");
    for f in ["report.json", "alignment.json", "similarity_heatmaps.svg", "mds_comparison.svg", "pair_scatter.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["provenance"]["seed"], 5);

    let figs = io.arg("figs");
    let o = squid(&["figures", "--report", out.join("report.json").to_str().unwrap(), "--out", &figs]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 4);
}

#[test]
fn report_without_config_is_validation_error() {
    assert_eq!(code(&squid(&["report"])), 1);
}

#[test]
fn unreachable_endpoint_is_io_error() {
    let io = Inputs::new();
    let endpoint = io.path("endpoint.toml");
    fs::write(&endpoint, "base_url = \"http://127.0.0.1:1/v1\"\nmodel = \"m\"\nretries = 0\ntimeout_secs = 2\n").unwrap();
    let o = squid(&["embed", "--config", endpoint.to_str().unwrap(), "--spec", &io.arg("q.json"), "--out", &io.arg("emb")]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn skeleton_lists_57_items() {
    let v = stdout_json(&squid(&["skeleton"]));
    assert_eq!(v["items"].as_array().unwrap().len(), 57);
    assert_eq!(v["dimensions"].as_array().unwrap().len(), 19);
}
