use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ascflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ascflow")).args(args).output().unwrap()
}

fn config(dir: &Path, name: &str, eps: f64) -> String {
    let path = dir.join(format!("{name}.toml"));
    fs::write(
        &path,
        format!(
            "name = \"{name}\"\ndimension = 2\ngauge = \"gauss-support\"\n\n[grid]\nmode = \"full2d\"\nresolution = 8\n\n\
             [body]\nshape = \"sphere\"\nradius = 1.0\n\n[pinch]\neps = {eps}\n"
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "s", 0.1);
    let out = dir.path().join("out");
    let o = ascflow(&["run", &cfg, "--output-dir", out.to_str().unwrap(), "--records", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("extinction T = 0.35"));
    for f in ["summary.json", "trajectory.csv", "diagnostics.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn quiet_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "s", 0.1);
    let o = ascflow(&["run", &cfg, "--quiet", "--output-dir", dir.path().join("o").to_str().unwrap(), "--records", "10"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = config(dir.path(), "bad", 1.5);
    assert_eq!(ascflow(&["run", &bad, "--output-dir", dir.path().join("o").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(ascflow(&["run", "/nonexistent.toml"]).status.code(), Some(5));
    assert_eq!(ascflow(&["verify", &bad]).status.code(), Some(2));
    assert_ne!(ascflow(&["frobnicate"]).status.code(), Some(0));
}

#[test]
fn batch_reports_the_worst_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("cfgs");
    fs::create_dir(&cfgs).unwrap();
    config(&cfgs, "a", 0.1);
    config(&cfgs, "b", 1.5);
    let out = dir.path().join("out");
    let o = ascflow(&["batch", cfgs.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--records", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let table = fs::read_to_string(out.join("batch.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn audit_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("audit.toml");
    fs::write(
        &path,
        "[batches.tiny]\nexpect = \"non-negative\"\n\n[batches.tiny.spec]\ndims = [2]\nsamples = 50\nseed = 1\neps_range = [0.05, 0.3]\n\
         bounds = { inf_psi = 1.0, sup_psi = 2.0, sup_grad = 0.5, sup_hess = 0.5 }\nc = { mode = \"admissible\", factor = 1.0 }\n",
    )
    .unwrap();
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = ascflow(&["audit", path.to_str().unwrap(), "--seed", seed, "--output-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read_to_string(out.join("audit_tiny.csv")).unwrap()
    };
    assert_eq!(run("7", "a"), run("7", "b"));
    assert_ne!(run("7", "a"), run("8", "c"));
}
