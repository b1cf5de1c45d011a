//! The `shearwater` binary end to end on a tiny corpus, plus its exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shearwater(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shearwater"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn ok(o: Output) -> String {
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// A config in `dir` with two modes, three learners and small models.
fn tiny_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "learners": ["xgb_binary", "sk_et", "svc"],
        "n_seeds": 2,
        "n_test_birds": 20,
        "synth": { "n_birds": 60, "min_points": 20, "max_points": 40 },
        "hyperparameters": {
            "xgb_binary": { "n_rounds": 10 },
            "sk_et": { "n_trees": 10, "bootstrap": false }
        }
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.clone(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = ok(shearwater(&cfg, &["synth"]));
    assert!(out.contains("train birds 60"), "{out}");

    let out = ok(shearwater(&cfg, &["--jobs", "2", "run"]));
    assert!(out.lines().any(|l| l.starts_with("ensemble,")), "{out}");
    assert!(out.contains("test n 20"), "{out}");
    let first = snapshot(&dir.path().join("out"));
    assert!(first.iter().any(|(p, _)| p.ends_with("ensemble.csv")));

    // reruns overwrite every artifact with identical bytes
    ok(shearwater(&cfg, &["--jobs", "1", "run"]));
    assert_eq!(snapshot(&dir.path().join("out")), first);

    let folds = dir.path().join("out/folds.csv");
    let before = fs::read(&folds).unwrap();
    ok(shearwater(&cfg, &["folds"]));
    assert_eq!(fs::read(&folds).unwrap(), before);

    let truth = dir.path().join("data/test_labels.csv");
    let truth = truth.to_str().unwrap();
    let out = ok(shearwater(
        &cfg,
        &["evaluate", "--predictions", truth, "--truth", truth],
    ));
    assert!(out.contains("accuracy 1.000000"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());

    assert_eq!(code(&shearwater(&cfg, &["--help"])), 0);
    assert_eq!(code(&shearwater(&cfg, &["no-such-command"])), 1);
    assert_eq!(code(&shearwater(&cfg, &["--jobs", "0", "folds"])), 1);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{ "k_folds": 1 }"#).unwrap();
    assert_eq!(code(&shearwater(&bad, &["folds"])), 1);

    // no training data yet
    assert_eq!(code(&shearwater(&cfg, &["extract"])), 2);

    ok(shearwater(&cfg, &["synth"]));
    let train = dir.path().join("data/train");
    let victim = fs::read_dir(&train).unwrap().next().unwrap().unwrap().path();
    fs::write(&victim, "not,a,trajectory\n1,2,3\n").unwrap();
    let o = shearwater(&cfg, &["extract"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains(victim.file_name().unwrap().to_str().unwrap()));
}
