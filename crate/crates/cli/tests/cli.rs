//! End-to-end behaviour of the `nors` binary: exit codes, listings, dataset
//! determinism and checkpoint evaluation.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nors(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nors"))
        .args(args)
        .env_remove("NORS_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = nors(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_phi41(dir: &Path, seed: &str) {
    ok(&[
        "gen-data", "--equation", "phi41", "--n", "24", "--nx", "32", "--nt", "10", "--seed", seed,
        "--out", p(dir),
    ]);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file() && p.file_name().unwrap() != "config.toml")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn compat_listing_has_ten_features() {
    let out = ok(&["features", "--equation", "phi41", "--height", "2", "--mode", "compat"]);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().any(|l| l.starts_with("I[(0|I[xi^1]),(0|Ic),(0|Ic)]\t2\t")));
    assert!(lines.iter().all(|l| l.split('\t').count() == 4));

    let json: Value = serde_json::from_str(&ok(&[
        "features", "--equation", "ns2d", "--mode", "compat", "--json",
    ]))
    .unwrap();
    assert_eq!(json.as_array().unwrap().len(), 29);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let bad_mode = nors(&["features", "--mode", "bogus"]);
    assert_eq!(bad_mode.status.code(), Some(2));
    assert_eq!(error_line(&bad_mode)["error"], "config");

    let tmp = tempfile::tempdir().unwrap();
    let missing = nors(&["eval", "--checkpoint", p(tmp.path()), "--data", p(&tmp.path().join("nope"))]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_line(&missing)["code"], 3);

    let blowup = nors(&[
        "gen-data", "--equation", "phi41", "--n", "2", "--nx", "16", "--nt", "4", "--sigma", "1e200",
        "--out", p(&tmp.path().join("b")),
    ]);
    assert_eq!(blowup.status.code(), Some(4), "{}", String::from_utf8_lossy(&blowup.stderr));
    assert_eq!(error_line(&blowup)["error"], "numerical");
}

#[test]
fn config_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\n[train]\nepochz = 3\n").unwrap();
    let out = nors(&["train", "--config", p(&cfg), "--data", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"].as_str().unwrap().contains("epochz"));
}

#[test]
fn gen_data_is_deterministic_and_refuses_to_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    small_phi41(&a, "3");
    small_phi41(&b, "3");
    small_phi41(&c, "4");
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    assert_ne!(dir_bytes(&a), dir_bytes(&c));

    let again = nors(&["gen-data", "--equation", "phi41", "--n", "24", "--nx", "32", "--nt", "10", "--out", p(&a)]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn train_then_evaluate_at_another_resolution() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    small_phi41(&data, "9");
    let summary: Value = serde_json::from_str(&ok(&[
        "train", "--data", p(&data), "--out", p(&run), "--epochs", "3", "--resolution", "16", "--quiet",
    ]))
    .unwrap();
    assert_eq!(summary["epochs"], 3);
    assert_eq!(summary["train_samples"], 20);
    for f in ["config.toml", "history.csv", "summary.json", "checkpoint/manifest.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }

    let same: Value = serde_json::from_str(&ok(&["eval", "--checkpoint", p(&run), "--data", p(&data)])).unwrap();
    assert_eq!(same["mean_rel_l2"], summary["final_test_rel_l2"]);

    let fine: Value = serde_json::from_str(&ok(&[
        "eval", "--checkpoint", p(&run), "--data", p(&data), "--resolution", "32",
    ]))
    .unwrap();
    assert_eq!(fine["sizes"][0], 32);
    assert!(fine["mean_rel_l2"].as_f64().unwrap().is_finite());

    let rerun = nors(&["train", "--data", p(&data), "--out", p(&run), "--epochs", "1", "--quiet"]);
    assert_eq!(rerun.status.code(), Some(2));
}
