use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
synth_days = 60
train_days = 40
test_days = 20
epochs = 4
bde_epochs = 5
";

fn qbde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbde"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{SMALL}out_dir = {}\n{extra}", dir.join("out").display())).unwrap();
    path.to_str().unwrap().to_string()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn run_all(cfg: &str) {
    for cmd in ["synth", "ingest", "train", "detect"] {
        ok(&qbde(&[cmd, "--config", cfg]));
    }
}

#[test]
fn full_pipeline_writes_traceable_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "");
    run_all(&cfg);
    let out = tmp.path().join("out");
    let report = ok(&qbde(&["report", "--config", &cfg]));
    for v in ["Normal", "Low_threat", "High_threat", "accuracy", "Th_d"] {
        assert!(report.contains(v), "report lacks {v}:\n{report}");
    }
    let digest = fs::read_to_string(out.join("features.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(digest.starts_with("# config-digest "));
    for f in [
        "parse_report.txt",
        "losses_k8.csv",
        "detection.csv",
        "summary.txt",
        "logs/labels.csv",
    ] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next().unwrap(), digest, "{f}");
    }
    let ckpt = fs::read_to_string(out.join("checkpoint_k8.qbde")).unwrap();
    assert!(ckpt.starts_with("qbde-ckpt-v1\n"));
    assert!(ckpt.contains(&digest));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k = 2\n");
    for cmd in ["synth", "ingest"] {
        ok(&qbde(&[cmd, "--config", &cfg]));
    }
    ok(&qbde(&["train", "--config", &cfg, "--k", "3"]));
    assert!(tmp.path().join("out/losses_k3.csv").exists());
    assert!(!tmp.path().join("out/losses_k2.csv").exists());
    let other = tmp.path().join("elsewhere");
    ok(&qbde(&["synth", "--config", &cfg, "--out", other.to_str().unwrap()]));
    assert!(other.join("logs/login.csv").exists());
}

#[test]
fn empty_test_set_reports_no_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "test_days = 0\n");
    run_all(&cfg);
    let report = ok(&qbde(&["report", "--config", &cfg]));
    assert_eq!(report.trim(), "no test records");
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "nonsense_key = 1\n").unwrap();
    let out = qbde(&["synth", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = qbde(&["train", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(tmp.path(), "");
    let out = qbde(&["train", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3), "missing features is an i/o error");

    run_all(&cfg);
    let det = tmp.path().join("out/detection.csv");
    let mut lines: Vec<String> = fs::read_to_string(&det).unwrap().lines().map(String::from).collect();
    lines[4] = lines[4].replacen("train", "bogus", 1);
    fs::write(&det, lines.join("\n") + "\n").unwrap();
    let out = qbde(&["report", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("detection.csv:5:"), "{err}");
}

#[test]
fn synth_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&qbde(&["synth", "--config", &write_config(d, ""), "--seed", "9"]));
    }
    for f in ["login.csv", "http.csv", "device.csv", "email.csv", "file.csv", "labels.csv"] {
        assert_eq!(
            fs::read(a.path().join("out/logs").join(f)).unwrap(),
            fs::read(b.path().join("out/logs").join(f)).unwrap(),
            "{f}"
        );
    }
}
