use std::path::Path;
use std::process::{Command, Output};

fn psychfm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psychfm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = psychfm(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn stages_chain_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "subjects=12", "games=15", "trials=10", "--seed", "3"]);
    ok(dir, &["featurize"]);
    ok(dir, &["split", "--seed", "3"]);
    ok(dir, &["train", "--model", "fm", "--input", "onehot", "--seed", "3"]);
    ok(dir, &["train", "--model", "ridge", "--input", "psych", "--seed", "3"]);
    assert!(read(dir.join("models/fm_onehot.model")).starts_with("psychfm-model v1 fm\n"));
    assert!(read(dir.join("models/ridge_psych.model")).starts_with("psychfm-model v1 linear\n"));

    ok(dir, &["blend", "--members", "fm:onehot,ridge:psych", "--seed", "3"]);
    let report = read(dir.join("report.md"));
    assert!(report.contains("| FM (A) + Ridge (B) |"), "{report}");
    assert!(read(dir.join("models/blend_fm_onehot+ridge_psych.model")).starts_with("psychfm-model v1 blend\n"));
    let val = read(dir.join("val_predictions.csv"));
    assert!(val.starts_with("SubjID,GameID,BRate,fm:onehot,ridge:psych,blend:fm:onehot+ridge:psych\n"), "{val}");

    ok(dir, &["eval", "--format", "csv", "--seed", "3"]);
    let csv = read(dir.join("report.csv"));
    assert_eq!(csv.lines().count(), 1 + 3, "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("FM (A) + Ridge (B),ensemble,")), "{csv}");
}

#[test]
fn ingest_reads_what_synth_writes() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, &["synth", "subjects=5", "games=8", "trials=5"]);
    let raw = a.join("raw.csv");
    ok(&b, &["ingest", "--raw", raw.to_str().unwrap()]);
    assert_eq!(read(a.join("rates.csv")), read(b.join("rates.csv")));
    assert_eq!(read(a.join("problems.csv")), read(b.join("problems.csv")));
}

#[test]
fn run_all_with_chosen_members_and_intercept() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(
        dir,
        &["run-all", "--synth", "subjects=15", "games=20", "--members", "ridge:onehot,lasso:psych", "--intercept", "--clip", "--format", "csv"],
    );
    let csv = read(dir.join("report.csv"));
    assert_eq!(csv.lines().count(), 1 + 3, "{csv}");
    assert!(csv.contains("Ridge (A) + Lasso (B),ensemble,"), "{csv}");
    assert!(csv.contains("intercept=true"), "{csv}");
    assert!(read(dir.join("config.txt")).contains("clip_predictions = true"));
}

#[test]
fn config_file_is_applied_and_logged() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nfm.k = 3\nfm.epochs = 5\nridge.lambda = 0.5\n").unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_psychfm"))
        .args(["run-all", "--synth", "subjects=10", "games=12", "--members", "fm:onehot,ridge:psych", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("RUST_LOG", "info")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fm.k = 3"));
    let report = read(out.join("report.md"));
    assert!(report.contains("k=3"), "{report}");
    assert!(report.contains("lambda=0.5"), "{report}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(psychfm(dir, &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(psychfm(dir, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(psychfm(dir, &["--help"]).status.code(), Some(0));
    assert_eq!(psychfm(dir, &["ingest", "--raw", "/definitely/not/here.csv"]).status.code(), Some(2));
    assert_eq!(psychfm(dir, &["synth", "subjects=0"]).status.code(), Some(1));
    assert_eq!(psychfm(dir, &["synth", "people=3"]).status.code(), Some(1));

    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "fm.depth = 3\n").unwrap();
    let o = psychfm(dir, &["synth", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fm.depth"));

    ok(dir, &["synth", "subjects=6", "games=10", "trials=3"]);
    ok(dir, &["featurize"]);
    ok(dir, &["split"]);
    assert_eq!(psychfm(dir, &["train", "--model", "fm", "--input", "psych"]).status.code(), Some(1));
    // blending members that were never trained
    assert_eq!(psychfm(dir, &["blend", "--members", "lasso:onehot"]).status.code(), Some(2));
}
