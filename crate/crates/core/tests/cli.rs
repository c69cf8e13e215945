use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rsgp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsgp")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "[experiment]\ntrials = 3\n[graph]\nn = 10\nmalicious = [9]\n[schedule]\nrounds = 200\n";

#[test]
fn run_writes_all_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let a = dir.path().join("a");
    let files = ["trials.csv", "aggregate.csv", "report.json", "sever_log_0.csv", "trajectory_2.csv"];
    let out = rsgp(&["run", &cfg, "--out", a.to_str().unwrap(), "--sample-stride", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|name| fs::read(a.join(name)).unwrap_or_else(|_| panic!("{name} missing")))
        .collect();
    let out = rsgp(&["run", &cfg, "--out", a.to_str().unwrap(), "--sample-stride", "50", "--parallel", "2"]);
    assert!(out.status.success());
    for (name, x) in files.iter().zip(&first) {
        assert!(*x == fs::read(a.join(name)).unwrap(), "{name} differs between runs");
    }
    let trials = fs::read_to_string(a.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 4);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out_dir = dir.path().join("o");
    let out = rsgp(&["run", &cfg, "--trials", "2", "--seed", "40", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let trials = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    let seeds: Vec<&str> = trials.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["40", "41"]);
}

#[test]
fn unknown_key_fails_fast_with_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[protocol]\nbetta = 1.0\n");
    let out = rsgp(&["run", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("betta"));
}

#[test]
fn sweep_compare_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = write_config(
        dir.path(),
        "sweep.toml",
        &format!("{SMALL}[sweep]\nparameter = \"beta\"\nvalues = [0.5, 3.0]\n"),
    );
    let out_dir = dir.path().join("s");
    let out = rsgp(&["sweep", &sweep, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().nth(1).unwrap().starts_with("beta,5.0000000000000000e-1,"));

    let tv = write_config(dir.path(), "tv.toml", &SMALL.replace("trials = 3", "trials = 3\nalgorithm = \"tv\""));
    let small = write_config(dir.path(), "small.toml", SMALL);
    let cmp_dir = dir.path().join("c");
    let out = rsgp(&["compare", &small, &tv, "--out", cmp_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cmp = fs::read_to_string(cmp_dir.join("compare.csv")).unwrap();
    assert!(cmp.contains("\nsmall,rsgp,") && cmp.contains("\ntv,tv,"));

    let out = rsgp(&["oracle", &small]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bound_holds"], serde_json::Value::Bool(true));
}
