use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use deepjam_cli::commands::{load_checkpoint, report};
use deepjam_cli::manifest::RunManifest;
use deepjam_cli::results::ResultSet;
use deepjam_cli::{EXIT_RUNTIME, EXIT_VALIDATION};
use deepjam_core::Dataset;

fn deepjam(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepjam"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(cwd: &Path, args: &[&str]) {
    let out = deepjam(cwd, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

const PIPELINE: &[&[&str]] = &[
    &["simulate", "--preset", "smoke", "--scenario", "2", "--seed", "7", "--out", "data"],
    &["train", "--preset", "smoke", "--seed", "7", "--data", "data", "--out", "trained"],
    &["align", "--checkpoint", "trained", "--data", "data", "--out", "aligned"],
    &["template", "--out", "aligned", "--mode", "warp"],
    &["evaluate", "--data", "aligned"],
];

#[test]
fn every_command_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in PIPELINE {
        ok(a.path(), args);
        ok(b.path(), args);
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in &sa {
        assert!(bytes == &sb[name], "{name} differs between runs");
    }
    assert!(sa.contains_key("aligned/plot_curves.csv"));
    assert!(!sa.keys().any(|k| k.ends_with(".lock")));

    ok(b.path(), &["simulate", "--preset", "smoke", "--scenario", "2", "--seed", "8", "--out", "other"]);
    assert_ne!(
        fs::read(a.path().join("data/observed_channel_1.csv")).unwrap(),
        fs::read(b.path().join("other/observed_channel_1.csv")).unwrap()
    );
}

#[test]
fn trained_run_reloads_to_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.toml");
    fs::write(&cfg, "n_total = 8\n").unwrap();
    ok(dir.path(), &["simulate", "--preset", "smoke", "--config", "toy.toml", "--scenario", "1", "--out", "data"]);
    ok(
        dir.path(),
        &["train", "--preset", "smoke", "--config", "toy.toml", "--iterations", "2", "--subset", "all", "--data", "data", "--out", "run"],
    );

    let manifest = RunManifest::read(&dir.path().join("run")).unwrap();
    let step = &manifest.steps[0];
    assert_eq!(step.command, "train");
    assert_eq!(step.loss_history.len(), 2);
    assert_eq!(step.config.as_ref().unwrap().outer_iterations, 2);

    let rs = ResultSet::read(&dir.path().join("run")).unwrap();
    assert_eq!(rs.observed.len(), 8);
    assert_eq!(step.report.as_ref(), Some(&report(&rs).unwrap()));
    assert_eq!(rs.result.loss_history, step.loss_history);

    // Aligning the training subjects with the checkpoint reproduces the
    // final training warps.
    let aligner = load_checkpoint(&dir.path().join("run")).unwrap();
    let ds = Dataset::read(&dir.path().join("data")).unwrap();
    let warps = aligner.predict_warps(&ds.functions).unwrap();
    for (w, stored) in warps.iter().zip(&rs.result.total_warps) {
        assert!(w.sup_distance(stored) < 1e-12);
    }
    assert_eq!(ds.functions, rs.observed);
}

#[test]
fn failures_exit_with_their_category() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| deepjam(dir.path(), args).status.code();

    assert_eq!(code(&["train", "--data", "missing", "--out", "x"]), Some(EXIT_VALIDATION));
    assert_eq!(code(&["simulate", "--preset", "smoke", "--out", "x"]), Some(EXIT_VALIDATION));
    fs::write(dir.path().join("bad.toml"), "layers = 3\n").unwrap();
    let out = deepjam(dir.path(), &["simulate", "--config", "bad.toml", "--scenario", "1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(EXIT_VALIDATION));
    assert!(String::from_utf8_lossy(&out.stderr).contains("layers"));

    ok(dir.path(), &["simulate", "--preset", "smoke", "--scenario", "1", "--out", "data"]);
    fs::write(dir.path().join("checkpoint.json"), "{\"net\": 1}").unwrap();
    let args = ["align", "--checkpoint", "checkpoint.json", "--data", "data", "--out", "y"];
    assert_eq!(code(&args), Some(EXIT_VALIDATION));

    fs::write(dir.path().join("data/observed_channel_1.csv"), "subject,0\n0,nan\n").unwrap();
    assert_eq!(code(&["train", "--preset", "smoke", "--data", "data", "--out", "z"]), Some(EXIT_VALIDATION));

    fs::create_dir(dir.path().join("locked")).unwrap();
    fs::write(dir.path().join("locked/.deepjam.lock"), "").unwrap();
    let args = ["simulate", "--preset", "smoke", "--scenario", "1", "--out", "locked"];
    assert_eq!(code(&args), Some(EXIT_RUNTIME));
}
