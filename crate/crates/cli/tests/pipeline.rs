use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qsim::analysis::analyze;
use qsim::measures::read_matrix_csv;
use qsim::{pipeline, RunConfig};
use qsim_core::stats::{MeasureMatrix, RowKey};
use serde_json::Value;

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

fn toy_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::load(&toy_dir().join("config.json")).unwrap();
    c.out = out.to_path_buf();
    c
}

fn qsim(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qsim"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn toy_measures_match_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    pipeline::measure(&toy_config(dir.path())).unwrap();
    let got = fs::read_to_string(dir.path().join("measures.jsonl")).unwrap();
    let golden = fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/toy_measures.jsonl"),
    )
    .unwrap();
    assert_eq!(got, golden);
}

#[test]
fn toy_values_spot_checks() {
    let dir = tempfile::tempdir().unwrap();
    pipeline::measure(&toy_config(dir.path())).unwrap();
    let report = lines(&dir.path().join("measures.jsonl"));
    assert_eq!(report.len(), 2);
    let a = &report[0];
    assert_eq!(a["simulator_id"], "sim-a");
    // "dog food for puppy" against itself, "puppy food", "cat food", "animal food brands"
    let jaccard: Vec<f64> = a["measures"]["jaccard"].as_array().unwrap()[..4]
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(jaccard, [1.0, 0.5, 0.2, 1.0 / 6.0]);
    assert_eq!(a["measures"]["wordnet"][0], 1.0);
    assert_eq!(a["wordnet_version"], "3.0");
    for (_, values) in a["measures"].as_object().unwrap() {
        assert_eq!(values.as_array().unwrap().len(), 12);
    }
}

#[test]
fn matrix_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let measured = pipeline::measure(&toy_config(dir.path())).unwrap();
    let back = read_matrix_csv(&dir.path().join("matrix.csv")).unwrap();
    assert_eq!(back, measured.run.matrix());
}

#[test]
fn no_measures_gives_empty_lists() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = toy_config(dir.path());
    c.measures = Some(vec![]);
    pipeline::measure(&c).unwrap();
    for line in lines(&dir.path().join("measures.jsonl")) {
        assert_eq!(line["measures"], serde_json::json!({}));
        assert_eq!(line["pairs"].as_array().unwrap().len(), 12);
    }
}

fn duplicated_column_matrix() -> MeasureMatrix<f64> {
    let mut m = MeasureMatrix::new(vec!["a".into(), "b".into(), "a2".into()]).unwrap();
    let xs = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 3.0, 6.0];
    let ys = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 7.0];
    for (i, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
        let key = RowKey {
            simulator_id: "s".into(),
            session_id: format!("t{i}"),
            rank: 1,
        };
        m.push_row(key, vec![Some(x), Some(y), Some(x)]).unwrap();
    }
    m
}

#[test]
fn duplicated_column_correlates_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        out: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let outcome = analyze(&duplicated_column_matrix(), &[], &config, "d", dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("pearson.csv")).unwrap();
    let row_a = csv.lines().find(|l| l.starts_with("a,")).unwrap();
    assert_eq!(row_a.split(',').nth(3), Some("1"));
    // the singular correlation matrix is an EFA failure; the rest is still written
    assert_eq!(outcome.failures.len(), 1);
    assert_eq!(outcome.failures[0].0, "efa");
    assert!(fs::read_to_string(dir.path().join("efa.json"))
        .unwrap()
        .contains("error"));
    for f in ["kendall.csv", "nmi.csv", "flags.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("heatmap.svg").exists());
}

#[test]
fn heatmap_labels_repeat_csv_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        heatmap: true,
        ..RunConfig::default()
    };
    analyze(&duplicated_column_matrix(), &[], &config, "d", dir.path()).unwrap();
    let svg = fs::read_to_string(dir.path().join("heatmap.svg")).unwrap();
    let csv = fs::read_to_string(dir.path().join("pearson.csv")).unwrap();
    for line in csv.lines().skip(2) {
        for cell in line.split(',').skip(1) {
            assert!(svg.contains(&format!(">{cell}</text>")), "{cell}");
        }
    }
}

#[test]
fn single_column_is_an_analysis_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = duplicated_column_matrix().select(&["a".into()]).unwrap();
    let err = analyze(&m, &[], &RunConfig::default(), "d", dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn bootstrap_json_is_reproducible() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        let mut c = toy_config(d.path());
        c.bootstrap.iterations = 50;
        pipeline::bootstrap(&c).unwrap();
    }
    let a = fs::read(d1.path().join("bootstrap.json")).unwrap();
    let b = fs::read(d2.path().join("bootstrap.json")).unwrap();
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let toy = toy_dir();
    let real = toy.join("real.json");
    let sim = toy.join("sim-a.json");
    let (real, sim) = (real.to_str().unwrap(), sim.to_str().unwrap());

    // missing inputs
    assert_eq!(qsim(&["measure", "--out", out]).0, 1);
    // an IR metric without qrels
    let cfg = dir.path().join("ndcg.json");
    fs::write(&cfg, r#"{"measures": ["ndcg"]}"#).unwrap();
    let (code, err) = qsim(&[
        "measure",
        "--config",
        cfg.to_str().unwrap(),
        "--real",
        real,
        "--simulated",
        sim,
        "--out",
        out,
    ]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("qrels"), "{err}");
    assert!(!dir.path().join("measures.jsonl").exists());
    // zero bootstrap iterations
    let cfg = dir.path().join("boot.json");
    fs::write(&cfg, r#"{"bootstrap": {"iterations": 0}}"#).unwrap();
    let args = [
        "bootstrap",
        "--config",
        cfg.to_str().unwrap(),
        "--real",
        real,
        "--simulated",
        sim,
        "--out",
        out,
    ];
    assert_eq!(qsim(&args).0, 1);
    // unreadable data
    assert_eq!(
        qsim(&[
            "measure",
            "--real",
            "/nonexistent.json",
            "--simulated",
            sim,
            "--out",
            out
        ])
        .0,
        2
    );
    // bad flag value
    assert_eq!(qsim(&["measure", "--pairing", "sideways"]).0, 1);
    // success
    let (code, err) = qsim(&["measure", "--real", real, "--simulated", sim, "--out", out]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(lines(&dir.path().join("measures.jsonl")).len(), 1);
}
