use std::path::Path;
use std::process::{Command, Output};

fn fairsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairsp"))
        .args(args)
        .env_remove("FAIRSP_OUT_DIR")
        .env_remove("FAIRSP_CACHE_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fairsp(args);
    assert!(
        out.status.success(),
        "{args:?}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small(out: &Path) -> Vec<String> {
    [
        "--synthetic",
        "biased",
        "--rows",
        "500",
        "--epochs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec()
}

fn with<'a>(verb: &'a str, base: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![verb];
    v.extend(base.iter().map(String::as_str));
    v.extend_from_slice(extra);
    v
}

#[test]
fn run_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(dir.path());
    let stdout = ok(&with(
        "run",
        &base,
        &[
            "--variant",
            "fairsp",
            "--epsilon",
            "1",
            "--clean-ratio",
            "0.3",
            "--seed",
            "7",
        ],
    ));
    let row: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(row["variant"], "fairsp");
    assert_eq!(row["seed"], 7);
    assert!(row["error"].is_null());
    assert!(row["accuracy"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("rows.jsonl").exists());
}

#[test]
fn run_rejects_several_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = fairsp(&with("run", &small(dir.path()), &["--epsilon", "0.5,1"]));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exactly one"));
}

#[test]
fn sweep_then_report_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(dir.path());
    let sweep = ok(&with(
        "sweep",
        &base,
        &[
            "--variant",
            "vanilla,fairsp",
            "--epsilon",
            "0.5",
            "--seeds",
            "5,7",
        ],
    ));
    assert!(sweep.contains("vanilla") && sweep.contains("fairsp"));
    let rows = std::fs::read_to_string(dir.path().join("rows.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    let before = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let report = ok(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(report.lines().next(), sweep.lines().next());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap(),
        before
    );
}

#[test]
fn ablate_writes_paired_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&with(
        "ablate",
        &small(dir.path()),
        &["--epsilon", "0.5", "--seeds", "5"],
    ));
    assert!(stdout.contains("with - without"));
    let deltas: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("paired_deltas.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(deltas.as_array().unwrap().len(), 1);
}

#[test]
fn prepare_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "seeds = [3]\nout_dir = \"out\"\n[dataset]\nkind = \"synthetic\"\npreset = \"unbiased\"\nn = 300\n")
        .unwrap();
    let stdout = ok(&["prepare", "--config", cfg.to_str().unwrap()]);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["rows"], 300);
    assert_eq!(summary["test_rows"], 150);
    assert!(dir.path().join("out/synthetic_spec.json").exists());
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(dir.path());
    for args in [
        with("sweep", &base, &["--epsilon", "-1"]),
        with("sweep", &base, &["--clean-ratio", "0"]),
        with("sweep", &base, &["--variant", "nonsense"]),
        vec!["sweep"],
        vec!["report", "--out", "/nonexistent/fairsp"],
    ] {
        let out = fairsp(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
    }
}
