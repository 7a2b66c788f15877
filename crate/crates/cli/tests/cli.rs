use std::path::Path;
use std::process::{Command, Output};

use ktrr::experiment::{RunReport, CONFIG_KEYS};

fn ktrr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktrr"))
        .args(args)
        .current_dir(cwd)
        .env_remove("KTRR_THREADS")
        .output()
        .unwrap()
}

const CONFIG: &str = "seed = 1\nruns = 2\nnum_clusters = 2\n[dataset]\nkind = \"circles\"\nper_cluster = 40\n\
                      [kmeans]\nrestarts = 10\n[output]\ndir = \"out\"\n";

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn help_lists_every_config_key() {
    let dir = setup();
    let out = ktrr(&["run", "--help"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for (key, _) in CONFIG_KEYS {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn run_writes_report_relative_to_config() {
    let dir = setup();
    let out = ktrr(&["run", "cfg.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let report = RunReport::from_json(&json).unwrap();
    assert_eq!(report.points.len(), 1);
    assert_eq!(report.points[0].runs.len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(!dir.path().join("out/affinity.csv").exists());
}

#[test]
fn overrides_and_dumps() {
    let dir = setup();
    let out = ktrr(
        &["run", "cfg.toml", "--set", "runs=3", "--set", "kernel.kind=heat", "--dump-matrices", "--out", "dump"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(&std::fs::read_to_string(dir.path().join("dump/report.json")).unwrap()).unwrap();
    assert_eq!(report.config.runs, 3);
    assert_eq!(report.points[0].kernel, ktrr::KernelKind::Heat);
    for f in ["affinity.csv", "embedding.csv", "coefficients.csv"] {
        assert!(dir.path().join("dump").join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_requires_a_grid() {
    let dir = setup();
    assert_eq!(ktrr(&["sweep", "cfg.toml"], dir.path()).status.code(), Some(2));
    let out = ktrr(&["sweep", "cfg.toml", "--set", "sweep.eta=[2,3]", "--set", "runs=1"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = setup();
    assert_eq!(ktrr(&["run", "missing.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(ktrr(&["run", "cfg.toml", "--set", "bogus=1"], dir.path()).status.code(), Some(2));
    let out = ktrr(
        &["run", "cfg.toml", "--set", "dataset.kind=csv", "--set", "dataset.path=nope.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dataset:"));
    let out = ktrr(&["run", "cfg.toml", "--set", "eta=1000"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver:"));
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn corrupt_curve_has_five_levels() {
    let dir = setup();
    let out = ktrr(&["corrupt-curve", "cfg.toml", "--set", "runs=1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = RunReport::from_json(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report.points.len(), 5);
}

#[test]
fn thread_cap_from_environment() {
    let dir = setup();
    let out = Command::new(env!("CARGO_BIN_EXE_ktrr"))
        .args(["run", "cfg.toml"])
        .current_dir(dir.path())
        .env("KTRR_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn selfcheck_passes() {
    let dir = setup();
    let out = ktrr(&["selfcheck"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn f32_precision() {
    let dir = setup();
    let out = ktrr(&["run", "cfg.toml", "--precision", "f32"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
