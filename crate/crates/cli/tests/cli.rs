use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_jobbias");

const TINY: &str = r#"{
  "synth": { "num_students": 160, "num_majors": 4, "num_colleges": 1, "planted_bias_spec": [] },
  "pipeline": {
    "embedding": { "hidden": [4], "train": { "epochs": 20 } },
    "gan": { "epochs": 20 },
    "train": { "epochs": 3, "hidden_size": 4 }
  },
  "seeds": [0, 1]
}"#;

fn jobbias(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = jobbias(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.json"), TINY).unwrap();
    ok(dir.path(), &["--config", "tiny.json", "--seed", "4", "--out", "data", "synth"]);
    dir
}

#[test]
fn synth_writes_three_files() {
    let dir = setup();
    for f in ["demographics.csv", "academics.csv", "employment.csv"] {
        assert!(dir.path().join("data").join(f).is_file(), "{f}");
    }
    let demo = std::fs::read_to_string(dir.path().join("data/demographics.csv")).unwrap();
    assert_eq!(demo.lines().count(), 161);
}

#[test]
fn full_chain_runs() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["--out", "bias", "analyze-bias", "--data", "data"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("bias/bias_report.json")).unwrap()).unwrap();
    assert_eq!(report["majors"].as_array().unwrap().len(), 4);

    ok(d, &["--config", "tiny.json", "--out", "emb", "embed", "--data", "data"]);
    for s in 1..=6 {
        assert!(d.join(format!("emb/embedding_s{s}.csv")).is_file());
    }

    ok(d, &["--config", "tiny.json", "--out", "aug", "augment", "--data", "data"]);
    let mut rdr = csv::Reader::from_path(d.join("aug/augmented.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[2], "synthetic");
    let mut counts = [0usize; 2];
    let mut synthetic = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        counts[rec[1].parse::<usize>().unwrap()] += 1;
        synthetic += rec[2].parse::<usize>().unwrap();
    }
    assert_eq!(counts[0], counts[1]);
    assert_eq!(synthetic, counts[1] - (160 - counts[1]));

    ok(d, &["--config", "tiny.json", "--out", "model", "train", "--data", "data"]);
    ok(d, &["--out", "pred", "predict", "--model", "model/model.json", "--data", "data"]);
    let preds = std::fs::read_to_string(d.join("pred/predictions.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("student_id,probability,prediction"));
    assert_eq!(preds.lines().count(), 161);
    assert!(d.join("pred/metrics.json").is_file());
}

#[test]
fn experiment_writes_reports() {
    let dir = setup();
    let out = ok(dir.path(), &["--config", "tiny.json", "--out", "exp", "experiment", "optimization-compare"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bias_reg vs l2"), "{text}");
    for f in ["report.json", "summary.csv", "per_seed.csv"] {
        assert!(dir.path().join("exp").join(f).is_file(), "{f}");
    }
    let per_seed = std::fs::read_to_string(dir.path().join("exp/per_seed.csv")).unwrap();
    assert_eq!(per_seed.lines().count(), 1 + 2 * 2);
}

#[test]
fn partial_synth_section_keeps_other_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("one.json"), r#"{ "synth": { "seed": 0 } }"#).unwrap();
    ok(d, &["--config", "one.json", "--out", "a", "synth"]);
    ok(d, &["--out", "b", "synth"]);
    for f in ["demographics.csv", "academics.csv", "employment.csv"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jobbias(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(jobbias(dir.path(), &["experiment", "no-such-kind"]).status.code(), Some(1));
    assert_eq!(jobbias(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_one() {
    let dir = setup();
    let d = dir.path();
    assert_eq!(jobbias(d, &["analyze-bias", "--data", "missing"]).status.code(), Some(1));
    std::fs::write(d.join("bad.json"), r#"{ "pipeline": { "num_semesters": 9 } }"#).unwrap();
    let out = jobbias(d, &["--config", "bad.json", "train", "--data", "data"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("num_semesters"));
    std::fs::write(d.join("typo.json"), r#"{ "pipline": {} }"#).unwrap();
    assert_eq!(jobbias(d, &["--config", "typo.json", "synth"]).status.code(), Some(1));
    std::fs::write(d.join("nested.json"), r#"{ "pipeline": { "train": { "epoch": 3 } } }"#).unwrap();
    assert_eq!(jobbias(d, &["--config", "nested.json", "train", "--data", "data"]).status.code(), Some(1));

    let demo = d.join("data/demographics.csv");
    let text = std::fs::read_to_string(&demo).unwrap();
    std::fs::write(&demo, text.replacen(",0,", ",7,", 1)).unwrap();
    let out = jobbias(d, &["analyze-bias", "--data", "data"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergence_exits_two() {
    let dir = setup();
    let d = dir.path();
    let cfg = r#"{
      "pipeline": {
        "use_gan": false,
        "embedding": { "hidden": [4], "train": { "epochs": 5 } },
        "train": { "epochs": 5, "hidden_size": 4, "learning_rate": 1e300, "optimizer": { "kind": "gd" } }
      }
    }"#;
    std::fs::write(d.join("hot.json"), cfg).unwrap();
    let out = jobbias(d, &["--config", "hot.json", "train", "--data", "data"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}
