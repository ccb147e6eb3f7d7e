use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_arw");

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs/examples")
        .join(name)
}

fn arw(subcommand: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(subcommand)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--workers", "1"])
        .args(extra)
        .output()
        .expect("spawn arw")
}

fn inline(tmp: &TempDir, body: &str) -> PathBuf {
    let path = tmp.path().join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn example_abelian_passes_and_writes_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw("abelian-check", &example("abelian.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["manifest_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 16);
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(report(&out)["manifest_hash"], hash.as_str());

    let csv = fs::read_to_string(out.join("abelian.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("manifest_hash,"));
    assert!(lines.all(|l| l.starts_with(&format!("{hash},"))));

    let outputs = manifest["outputs"].as_object().unwrap();
    for name in [
        "abelian.csv",
        "monotonicity.csv",
        "equivalence.csv",
        "carpet.csv",
        "report.json",
    ] {
        assert!(outputs.contains_key(name), "{name} missing from manifest");
    }
}

#[test]
fn corrupted_tapes_exit_with_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw("abelian-check", &example("abelian_corrupt.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert!(r["campaigns"][0]["failures"].as_u64().unwrap() > 0);
}

#[test]
fn json_format_wraps_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw(
        "critical-scan",
        &example("critical.toml"),
        &out,
        &["--format", "json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let scan: Value =
        serde_json::from_str(&fs::read_to_string(out.join("scan.json")).unwrap()).unwrap();
    assert_eq!(scan["rows"].as_array().unwrap().len(), 6);
    assert_eq!(scan["manifest_hash"], report(&out)["manifest_hash"]);
}

#[test]
fn seed_override_changes_manifest_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = example("critical.toml");
    assert_eq!(arw("critical-scan", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(
        arw("critical-scan", &cfg, &b, &["--seed", "12"])
            .status
            .code(),
        Some(0)
    );
    assert_ne!(report(&a)["manifest_hash"], report(&b)["manifest_hash"]);
}

#[test]
fn empty_campaign_topples_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        r#"
[run]
name = "empty"
master_seed = 1

[abelian]
configs = 20
orders = 3
models = [{ model = "arw", lambda = 1.0 }]

[abelian.boxes]
dims = [1, 2]
max_side = 5
law = { dist = "poisson", mean = 0.0 }
"#,
    );
    let out = tmp.path().join("out");
    let o = arw("abelian-check", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["campaigns"][0]["topplings"], 0);
    assert_eq!(r["campaigns"][0]["failures"], 0);
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        "[run]\nname = \"x\"\nmaster_seed = 1\nmaster_sed = 2\n\n[scan]\nlambdas = [1.0]\nmu_grid = [0.5]\nladder = [10]\nseeds_per_point = 1\ntransition_tolerance = 0.1\n",
    );
    let o = arw("critical-scan", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("master_sed"), "{}", stderr(&o));
}

#[test]
fn density_grid_outside_unit_interval_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        "[run]\nname = \"x\"\nmaster_seed = 1\n\n[scan]\nlambdas = [1.0]\nmu_grid = [0.5, 1.2]\nladder = [10]\nseeds_per_point = 1\ntransition_tolerance = 0.1\n",
    );
    let o = arw("critical-scan", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

fn flow_config(p: f64, law: &str) -> String {
    format!(
        "[run]\nname = \"x\"\nmaster_seed = 1\n\n[flow]\np = {p}\nlaw = {law}\nt_list = [1.0]\nladder = [5, 10]\nruns = 100\nks_threshold = 0.5\nmean_tolerance = 0.5\n"
    )
}

#[test]
fn symmetric_flow_is_a_precondition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        &flow_config(0.5, "{ dist = \"poisson\", mean = 1.0 }"),
    );
    let o = arw("flow-scaling", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires p > 1/2"), "{}", stderr(&o));
}

#[test]
fn deterministic_flow_law_is_a_precondition_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        &flow_config(
            0.8,
            "{ dist = \"bernoulli_mixture\", low = 1, high = 1, p_high = 0.5 }",
        ),
    );
    let o = arw("flow-scaling", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("non-constant required"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_config_file_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = arw(
        "simulate",
        &tmp.path().join("nope.toml"),
        &tmp.path().join("out"),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tiny_event_budget_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = inline(
        &tmp,
        r#"
[run]
name = "budget"
master_seed = 3

[simulate]
model = { model = "arw", lambda = 1.0 }
law = { dist = "poisson", mean = 0.8 }
lo = [-50]
hi = [50]
horizon = "inf"
event_budget = 100
"#,
    );
    let out = tmp.path().join("out");
    let o = arw("simulate", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(report(&out)["truncated"], true);
}

#[test]
fn simulate_dumps_final_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw("simulate", &example("simulate.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("final.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + 41 * 41);
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.lines().count() > 2);
}

#[test]
fn fixation_example_meets_expectations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw("fixation-probe", &example("fixation.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert!(r["probes"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p["expectation_met"] == true));
    assert_eq!(r["growth"]["strictly_increasing"], true);
}

#[test]
fn flow_example_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = arw("flow-scaling", &example("flow.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["reference"]["moments_ok"], true);
    assert!(out.join("cdf.csv").exists());
}
