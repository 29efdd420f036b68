use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use firmsurv_cli::report::validate_report;
use firmsurv_cli::stages::{self, AlgorithmMetrics, MixtureFile};
use firmsurv_cli::{run_pipeline, PipelineConfig};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_firmsurv"))
}

const SMALL: &str = r#"
seed = 11
[synthetic]
n_rows = 1500
predict_rows = 1200
n_numeric = 6
minority_fraction = 0.1
[classifiers.params.bag]
members = 8
[classifiers.params.ctree]
permutations = 99
[classifiers.params.ann]
epochs = 150
"#;

fn small_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml(SMALL).unwrap();
    cfg.paths.output = out.to_path_buf();
    cfg
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn comparable(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v["config"]["paths"]["output"] = Value::Null;
    v
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn pipeline_dir(dir: &Path) -> PathBuf {
    let out = dir.join("run");
    let report = run_pipeline(&small_config(&out)).unwrap();
    firmsurv_cli::emit_report(&report, &out).unwrap();
    out
}

#[test]
fn help_and_usage_exit_codes() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "simulate", "clean", "split", "smote", "train", "evaluate", "mix", "predict", "km", "cox", "pipeline",
    ] {
        assert!(text.contains(sub), "help lacks {sub}");
    }
    assert_eq!(
        bin().args(["pipeline", "--no-such-flag"]).status().unwrap().code(),
        Some(1)
    );
    assert_eq!(bin().arg("frobnicate").status().unwrap().code(), Some(1));
    assert_eq!(bin().status().unwrap().code(), Some(1));
    assert_eq!(
        bin()
            .args(["pipeline", "--set", "split.bogus=1"])
            .status()
            .unwrap()
            .code(),
        Some(1)
    );
}

#[test]
fn missing_input_file_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = bin()
        .args(["split", "--input", missing.to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.schema"));

    fs::write(dir.path().join("nowhere.schema"), "id = numeric,id\n").unwrap();
    let out = bin()
        .args(["split", "--input", missing.to_str().unwrap(), "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn separable_cox_fixture_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sep.csv");
    // every carrier fails before any non-carrier does
    let mut text = String::from("id;x;duration;event\n");
    for (i, (x, t)) in [(1, 1.0), (1, 2.0), (1, 3.0), (0, 4.0), (0, 5.0), (0, 6.0), (0, 7.0)]
        .iter()
        .enumerate()
    {
        text.push_str(&format!("{};{x};{t};1\n", i + 1));
    }
    fs::write(&csv, text).unwrap();
    fs::write(
        dir.path().join("sep.schema"),
        "id = numeric,id\nx = numeric,feature\nduration = numeric,duration\nevent = numeric,event\n",
    )
    .unwrap();
    let out = bin()
        .args(["cox", "--input", csv.to_str().unwrap(), "--formula", "x", "--out-dir"])
        .arg(dir.path().join("cox"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("separation"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("x (direction +1)"), "{stdout}");
    let section: Value = serde_json::from_str(&read(dir.path().join("cox/cox.json"))).unwrap();
    assert_eq!(section["models"][0]["diagnostics"][0]["direction"], 1);
}

#[test]
fn synthetic_pipeline_is_complete_and_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ra, rb) = (pipeline_dir(a.path()), pipeline_dir(b.path()));
    let text = read(ra.join("report.json"));
    let v: Value = serde_json::from_str(&text).unwrap();
    validate_report(&v).unwrap();
    let stages_run: Vec<&str> = v["timings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["stage"].as_str().unwrap())
        .collect();
    assert_eq!(
        stages_run,
        ["load", "clean", "split", "smote", "train", "evaluate", "mix", "predict", "km", "cox"]
    );
    let cox = v["cox"]["models"].as_array().unwrap();
    assert_eq!(cox.len(), 5);
    assert!(cox.iter().any(|m| !m["report"].is_null()));
    assert!(v["error"].is_null());

    assert_eq!(comparable(&text), comparable(&read(rb.join("report.json"))));
    for f in [
        "labels.csv",
        "km.csv",
        "roc.csv",
        "metrics.json",
        "mixture.json",
        "cox.json",
        "cox.txt",
        "km.svg",
        "roc.svg",
        "models/bag.json",
        "smote/train.csv",
        "score_histogram.csv",
        "logrank.json",
    ] {
        assert_eq!(read(ra.join(f)), read(rb.join(f)), "{f} differs between runs");
    }
}

#[test]
fn top_two_components_match_metrics_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline_dir(dir.path());
    let metrics: Vec<AlgorithmMetrics> = serde_json::from_str(&read(out.join("metrics.json"))).unwrap();
    let mut ranked: Vec<(f64, usize)> = metrics.iter().enumerate().map(|(i, m)| (m.auc, i)).collect();
    // descending AUC, earlier entry first on ties
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mix: MixtureFile = serde_json::from_str(&read(out.join("mixture.json"))).unwrap();
    assert_eq!(
        mix.summary.components,
        [metrics[ranked[0].1].algorithm, metrics[ranked[1].1].algorithm]
    );
}

#[test]
fn km_csv_rows_match_distinct_event_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline_dir(dir.path());
    let labels = stages::read_labels(&out.join("labels.csv")).unwrap();
    let data = stages::load_dataset(&out.join("clean/predict_era.csv"), None, Default::default()).unwrap();
    let dur = data.numeric(data.column_index("duration").unwrap()).unwrap();
    let ev = data.numeric(data.column_index("event").unwrap()).unwrap();
    let mut expected: BTreeMap<String, BTreeSet<u64>> = BTreeMap::new();
    for (r, l) in labels.iter().enumerate() {
        if ev[r] == Some(1.0) {
            expected
                .entry(l.label.to_string())
                .or_default()
                .insert(dur[r].unwrap().to_bits());
        }
    }
    let km = read(out.join("km.csv"));
    let mut lines = km.lines();
    assert_eq!(lines.next(), Some("group,time,at_risk,deaths,survival,sd,ci_lo,ci_hi"));
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for line in lines {
        *counts.entry(line.split(',').next().unwrap().to_string()).or_default() += 1;
    }
    let expected: BTreeMap<String, usize> = expected.into_iter().map(|(k, v)| (k, v.len())).collect();
    assert_eq!(counts, expected);
}

#[test]
fn stages_run_one_by_one_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let full = pipeline_dir(dir.path());
    let cfg_path = dir.path().join("small.toml");
    fs::write(&cfg_path, SMALL).unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let p = |rel: &str| full.join(rel).to_str().unwrap().to_string();
    let s = dir.path().join("steps");
    let q = |rel: &str| s.join(rel).to_str().unwrap().to_string();

    run_ok(&[
        "clean",
        "--config",
        cfg,
        "--input",
        &p("data/train_era.csv"),
        "--second",
        &p("data/predict_era.csv"),
        "--out-dir",
        &q("clean"),
    ]);
    run_ok(&[
        "split",
        "--config",
        cfg,
        "--input",
        &q("clean/train_era.csv"),
        "--out-dir",
        &q("split"),
    ]);
    run_ok(&[
        "smote",
        "--config",
        cfg,
        "--input",
        &q("split/train.csv"),
        "--out-dir",
        &q("smote"),
    ]);
    run_ok(&[
        "train",
        "--config",
        cfg,
        "--input",
        &q("smote/train.csv"),
        "--out-dir",
        &q("models"),
    ]);
    run_ok(&[
        "evaluate",
        "--config",
        cfg,
        "--test",
        &q("split/test.csv"),
        "--models",
        &q("models"),
        "--out-dir",
        &q(""),
    ]);
    run_ok(&[
        "mix",
        "--config",
        cfg,
        "--test",
        &q("split/test.csv"),
        "--models",
        &q("models"),
        "--out-dir",
        &q(""),
    ]);
    run_ok(&[
        "predict",
        "--config",
        cfg,
        "--input",
        &q("clean/predict_era.csv"),
        "--mixture",
        &q("models/mixture.json"),
        "--out-dir",
        &q(""),
    ]);
    run_ok(&[
        "km",
        "--config",
        cfg,
        "--input",
        &q("clean/predict_era.csv"),
        "--labels",
        &q("labels.csv"),
        "--out-dir",
        &q(""),
    ]);
    // the configured references, supplied as a file instead
    let refs = dir.path().join("refs.txt");
    fs::write(&refs, "# reference levels\nsector = C\n\nlocation=MI\n").unwrap();
    let status = bin()
        .args([
            "cox",
            "--config",
            cfg,
            "--input",
            &q("clean/predict_era.csv"),
            "--labels",
            &q("labels.csv"),
            "--references",
            refs.to_str().unwrap(),
            "--out-dir",
            &q(""),
        ])
        .status()
        .unwrap();
    let cox: Value = serde_json::from_str(&read(full.join("cox.json"))).unwrap();
    let cox_ok = cox["models"].as_array().unwrap().iter().all(|m| m["error"].is_null());
    assert_eq!(status.success(), cox_ok);

    for f in [
        "clean/train_era.csv",
        "clean/predict_era.csv",
        "split/test.csv",
        "smote/train.csv",
        "models/ann.json",
        "models/ctree.json",
        "metrics.json",
        "roc.csv",
        "mixture.json",
        "models/mixture.json",
        "labels.csv",
        "predictions.json",
        "km.csv",
        "km.json",
        "logrank.json",
        "score_histogram.csv",
        "cox.json",
        "cox.txt",
    ] {
        assert_eq!(read(full.join(f)), read(s.join(f)), "{f} differs");
    }
}

#[test]
fn failing_stage_leaves_a_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    // a sample without duration/event columns trains fine but cannot feed
    // the survival stages
    let train = dir.path().join("plain.csv");
    let mut text = String::from("x;inn\n");
    for i in 0..200 {
        text.push_str(&format!(
            "{};{}\n",
            f64::from(i % 17) + if i % 5 == 0 { 20.0 } else { 0.0 },
            u8::from(i % 5 == 0)
        ));
    }
    fs::write(&train, text).unwrap();
    fs::write(
        dir.path().join("plain.schema"),
        "x = numeric,feature\ninn = numeric,label\n",
    )
    .unwrap();
    let status = bin()
        .args([
            "pipeline",
            "--train",
            train.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(["--algorithms", "rpart,logit,nb", "--set", "smote.k=3"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let v: Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    validate_report(&v).unwrap();
    assert_eq!(v["error"]["stage"], "km");
    assert!(!v["prediction"].is_null());
    assert!(v["survival"].is_null() && v["cox"].is_null());
    assert!(out.join("labels.csv").exists());
}

#[test]
fn simulate_writes_loadable_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    run_ok(&[
        "simulate",
        "--out",
        csv.to_str().unwrap(),
        "--rows",
        "300",
        "--missing-max-rate",
        "0.2",
        "--seed",
        "3",
    ]);
    let d = stages::load_dataset(&csv, None, Default::default()).unwrap();
    assert_eq!(d.n_rows(), 300);
    let missing: usize = (0..d.n_cols())
        .map(|c| (0..d.n_rows()).filter(|&r| d.is_missing(r, c)).count())
        .sum();
    assert!(missing > 0);
}
