use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dskl::Model;

fn dskl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dskl"))
        .args(args)
        .output()
        .expect("run dskl")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
replications = 3
horizons = [16, 32, 64]
master_seed = 9
cached = true

[problem]
gamma = 0.5
zeta = 0.5
truncation = 2000

[schedule]
preset = "decaying"
"#;

#[test]
fn train_writes_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model.json");
    let run = dskl(&["train", "--horizon", "50", "--seed", "3", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let model = Model::deserialize(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(model.steps_taken(), 50);

    let again = dir.path().join("again.json");
    dskl(&["train", "--horizon", "50", "--seed", "3", "--out", path_str(&again)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn sweep_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("sweep");
    let run = dskl(&["sweep", "--config", path_str(&cfg), "--out", path_str(&out), "--threads", "1"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 3 * 3);
    let per_t = fs::read_to_string(out.join("per_t.csv")).unwrap();
    assert_eq!(per_t.lines().count(), 1 + 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["theoretical_exponent"], -0.25);
    assert!(summary["rate"]["slope"].is_number());
}

#[test]
fn sweep_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("sweep");
    let run = dskl(&[
        "sweep",
        "--config",
        path_str(&cfg),
        "--out",
        path_str(&out),
        "--replications",
        "2",
        "--horizons",
        "8,16",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 2 * 2);
}

#[test]
fn verify_bounds_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.csv");
    let run = dskl(&["verify-bounds", "--draws", "20", "--out", path_str(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("name,exact,bound,slack,pass\n"));
    assert!(table.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn kernel_check_reports_pairs() {
    let run = dskl(&["kernel-check", "--dim", "2", "--m", "2000", "--pairs", "10"]);
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 11);
    assert!(String::from_utf8_lossy(&run.stderr).contains("pairs within"));
}

#[test]
fn validate_schedule_default_passes() {
    let run = dskl(&["validate-schedule", "--horizons", "256,4096"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let rows = report["results"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["validation"]["passed"] == true));
}

#[test]
fn validate_schedule_reports_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("reg.toml");
    fs::write(
        &cfg,
        "[problem]\ngamma = 0.25\nzeta = 1.0\n\n[schedule]\npreset = \"regularized\"\nepsilon = 0.05\n",
    )
    .unwrap();
    let run = dskl(&["validate-schedule", "--config", path_str(&cfg), "--horizons", "256"]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("failed validation"));
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[problem]\ngamma = 0.5\nzeta = 0.5\nunknown = 1\n").unwrap();
    let run = dskl(&["train", "--config", path_str(&cfg)]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("parsing"));

    let run = dskl(&["train", "--config", path_str(&dir.path().join("missing.toml"))]);
    assert!(!run.status.success());
}
