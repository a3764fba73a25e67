use std::path::Path;
use std::process::{Command, Output};

fn renoir(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renoir"))
        .current_dir(dir)
        .args(args)
        .env_remove("RENOIR_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const CONFIG: &str = r#"{
  "seed": 4,
  "dataset": {"kind": "blobs", "n": 60, "centers": [[-0.5, 0.0], [0.5, 0.0]], "spread": 0.15},
  "model": {"hidden": [6]},
  "noise": NOISE,
  "training": {"epochs": 4, "lr_schedule": [[0, 0.05]]}
}"#;

fn setup(noise: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), CONFIG.replace("NOISE", noise)).unwrap();
    assert!(renoir(dir.path(), &["data", "--config", "c.json", "--out", "d.csv"])
        .status
        .success());
    let o = renoir(dir.path(), &["train", "--config", "c.json", "--out", "m.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

#[test]
fn divergence_prints_six_decimals() {
    let here = Path::new(".");
    let o = renoir(here, &["divergence", "--p", "1,0", "--q", "0.5,0.5", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), format!("{:.6}\n", 2f64.ln()));
    let o = renoir(
        here,
        &["divergence", "--p", "0.7,0.3", "--q", "0.5,0.5", "--metric", "tv"],
    );
    assert_eq!(stdout(&o), "0.200000\n");
    let o = renoir(here, &["divergence", "--p", "0.5,0.5", "--q", "1,0", "--lambda", "2"]);
    assert_eq!(stdout(&o), "inf\n");
}

#[test]
fn validation_errors_exit_two() {
    let here = Path::new(".");
    let o = renoir(here, &["divergence", "--p", "0.7,0.4", "--q", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sum"));
    let o = renoir(here, &["divergence", "--p", "1,0", "--q", "0.5,0.5", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = renoir(here, &["train", "--config", "missing.json", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        CONFIG.replace("NOISE", r#"{"family": "gaussian", "sigma": -1}"#),
    )
    .unwrap();
    let o = renoir(dir.path(), &["train", "--config", "bad.json", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
    std::fs::write(
        dir.path().join("noseed.json"),
        CONFIG.replace("NOISE", "\"none\"").replace("\"seed\": 4,", ""),
    )
    .unwrap();
    let o = renoir(dir.path(), &["train", "--config", "noseed.json", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn zero_noise_model_has_no_certificate() {
    let dir = setup("\"none\"");
    let o = renoir(
        dir.path(),
        &["certify", "--model", "m.json", "--alpha", "0.1", "--lambda", "2"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("certificate requires a noise model"));
}

#[test]
fn certify_attack_and_curve_artifacts() {
    let dir = setup(r#"{"family": "gaussian", "sigma": 0.3}"#);
    let p = dir.path();
    let o = renoir(
        p,
        &[
            "certify", "--model", "m.json", "--alpha", "0.1", "--lambda", "2", "--metric", "tv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cert: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cert["metric"], "tv");
    assert!(cert["meta"]["config_hash"].is_string());

    let o = renoir(
        p,
        &[
            "attack",
            "--model",
            "m.json",
            "--data",
            "d.csv",
            "--attack",
            "grid",
            "--alpha",
            "0.1",
            "--grid-resolution",
            "2",
            "--grid-draws",
            "10",
            "--mc",
            "100",
            "--seed",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["attack"], "grid");
    assert_eq!(report["meta"]["seed"], 1);
    assert!(report["gap_bound_renyi"].as_f64().unwrap() >= 0.0);

    let o = renoir(
        p,
        &[
            "curve",
            "--model",
            "m.json",
            "--data",
            "d.csv",
            "--alpha-grid",
            "0:0.2:0.1",
            "--mc",
            "100",
            "--seed",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("alpha,epsilon,exp_neg_shannon,gap_bound,guaranteed_accuracy\n"));
    assert_eq!(csv.lines().count(), 4);
    let o = renoir(
        p,
        &[
            "curve",
            "--model",
            "m.json",
            "--data",
            "d.csv",
            "--alpha-grid",
            "0.2,0.1",
            "--mc",
            "100",
            "--seed",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(2));

    let loss = std::fs::read_to_string(p.join("m.loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss\n"));
    assert_eq!(loss.lines().count(), 5);
}
