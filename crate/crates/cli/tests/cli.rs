use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn impsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impsel")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_fig3_first(dir: &Path) -> String {
    let path = dir.join("fig3-1.json");
    let out = impsel(&["gen", "--generator", "figure", "--family", "fig3", "--index", "1", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

fn write_graph(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exact_rho_permutation_on_first_fig3_instance() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_fig3_first(dir.path());
    let out = impsel(&["exact", "--mech", "rho-permutation", "--rho", "2/3", "--graph", &graph, "--pred", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out), serde_json::json!({ "0": "2/3", "1": "1/3" }));
}

#[test]
fn exact_reads_plain_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g.json", r#"{"n":2,"edges":[[1,0]]}"#);
    let out = impsel(&["exact", "--mech", "rho-permutation", "--rho", "1/2", "--graph", &graph, "--pred", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out), serde_json::json!({ "0": "1/2", "1": "1/2" }));
    let csv = impsel(&["exact", "--mech", "uniform-permutation", "--graph", &graph, "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap(), "vertex,probability\n0,1/2\n1,1/2\n");
}

#[test]
fn audit_claims_passes() {
    let out = impsel(&["audit-claims", "--k-max", "25"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["pass"], Value::Bool(true));
}

#[test]
fn run_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), "g.json", r#"{"n":6,"edges":[[0,1],[2,1],[3,4],[5,4],[1,0],[4,3]]}"#);
    let args = ["run", "--mech", "rho-partition", "--k", "2", "--rho", "1/2", "--graph", &graph, "--pred", "1,4", "--seed", "9"];
    let first = impsel(&args);
    let second = impsel(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(stdout_json(&first)["selected"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = impsel(&["exact", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_fig3_first(dir.path());
    let bad_rho = impsel(&["exact", "--mech", "rho-permutation", "--rho", "3/2", "--graph", &graph, "--pred", "0"]);
    assert_eq!(bad_rho.status.code(), Some(2));
    let missing_pred = impsel(&["exact", "--mech", "fixed-bidirectional", "--graph", &graph, "--pred", "0"]);
    assert_eq!(missing_pred.status.code(), Some(2));
    let self_loop = write_graph(dir.path(), "loop.json", r#"{"n":2,"edges":[[1,1]]}"#);
    let out = impsel(&["exact", "--mech", "uniform-permutation", "--graph", &self_loop]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn impartiality_audit_on_a_family() {
    let out = impsel(&["audit-impartiality", "--mech", "fixed-bidirectional", "--family", "fig5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(!report["checks"].as_array().unwrap().is_empty());
}

#[test]
fn trivial_mechanism_sits_inside_the_single_selection_region() {
    let out = impsel(&["audit-bounds", "--mech", "trivial", "--k", "1", "--setting", "sel1"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["alpha_hat"], "1");
    assert_eq!(report["beta_hat"], "0");
}

#[test]
fn bound_audit_for_rho_permutation() {
    let out = impsel(&["audit-bounds", "--mech", "rho-permutation", "--rho", "2/3", "--setting", "sel1"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
}

#[test]
fn lottery_needs_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_fig3_first(dir.path());
    let out = impsel(&["exact", "--mech", "lottery", "--graph", &graph, "--pred", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let spec = write_graph(
        dir.path(),
        "spec.json",
        r#"{"kind":"LOTTERY","mix_weight":"1/2","a":{"kind":"RHO_PERMUTATION","rho":"1"},"b":{"kind":"UNIFORM_PERMUTATION"}}"#,
    );
    let out = impsel(&["exact", "--spec", &spec, "--graph", &graph, "--pred", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // (1 + 1/2) / 2 for the predicted sink.
    assert_eq!(stdout_json(&out)["0"], "3/4");
}

#[test]
fn eval_writes_csv_with_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.csv");
    let out = impsel(&[
        "eval", "--mech", "rho-permutation", "--rho", "1/2", "--generator", "figure", "--family", "fig3", "--trials",
        "2000", "--format", "csv", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "instance_id,n,k,delta_k,pred_indegree,eta,mean,ci,ratio");
    assert!(lines.count() >= 1);
}

#[test]
fn eval_json_is_byte_identical_across_runs() {
    let args = ["eval", "--mech", "uniform-permutation", "--n", "5", "--count", "3", "--trials", "500", "--seed", "4"];
    let a = impsel(&args);
    let b = impsel(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn curves_rows_and_printed_values() {
    let out = impsel(&["curves", "--kinds", "RHO_PARTITION,K_PARTITION_BASELINE", "--k-min", "2", "--k-max", "4", "--rhos", "1/2,1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 3 * 2);
    assert!(rows.iter().any(|r| r.starts_with("RHO_PARTITION,3,1/2,5/6,19/36,")));
    assert!(rows.iter().any(|r| r.starts_with("K_PARTITION_BASELINE,3,1/2,65/108,65/108,")));
}

#[test]
fn gen_random_lists_requested_count() {
    let out = impsel(&["gen", "--generator", "plurality", "--n", "5", "--count", "4", "--k", "2", "--seed", "1"]);
    assert!(out.status.success());
    let list = stdout_json(&out);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 4);
    assert_eq!(list[0]["prediction"]["vertices"].as_array().unwrap().len(), 2);
}
