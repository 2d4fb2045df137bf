use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn acrwl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acrwl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", &path]);
    assert!(acrwl(&all).status.success());
    path
}

#[test]
fn gnn_trace_on_four_node_order() {
    let dir = tempfile::tempdir().unwrap();
    let l4 = gen(dir.path(), "l4.json", &["--kind", "linear-order", "--n", "4"]);
    let out = acrwl(&["gnn", "--model", "lin", "--graph", &l4, "--trace"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["output"], serde_json::json!([true, true, true, true]));
    assert_eq!(v["trace"][2]["states"][3], serde_json::json!(["1000", "111"]));
    assert_eq!(v["trace"][1]["layer"], "pow10_indegree");
}

#[test]
fn experiment_reports_and_exit_codes() {
    let out = acrwl(&["experiment", "--mode", "directed", "--ell", "1", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["separated"], true);
    assert_eq!(r["params"]["mode"], "directed");
    assert!(r["timings_ms"].as_object().unwrap().contains_key("wl"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = acrwl(&["experiment", "--mode", "undirected", "--ell", "1", "--c", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["data"]["nine_cycle"].as_array().unwrap().len(), 9);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(acrwl(&["experiment", "--mode", "sideways"]).status.code(), Some(2));
    assert_eq!(acrwl(&["experiment", "--mode", "directed", "--ell", "0", "--c", "1"]).status.code(), Some(2));
    assert_eq!(acrwl(&["soundness", "--max-nodes", "9"]).status.code(), Some(2));
    assert_eq!(acrwl(&["eval", "--graph", "/nonexistent", "--formula", "x = x"]).status.code(), Some(2));
}

#[test]
fn eval_normalize_and_distinguish() {
    let dir = tempfile::tempdir().unwrap();
    let l3 = gen(dir.path(), "l3.json", &["--kind", "linear-order", "--n", "3"]);
    let out = acrwl(&["eval", "--graph", &l3, "--formula", "exists y. E(x,y)"]);
    assert_eq!(json(&out)["value"], serde_json::json!([true, true, false]));
    let out = acrwl(&["eval", "--graph", &l3, "--formula", "forall x. forall y. (x = y | E(x,y) | E(y,x))"]);
    assert_eq!(json(&out)["value"], true);

    let out = acrwl(&["normalize", "--formula", "E(x,y) & exists y. P1(y)"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(!v["disjuncts"].as_array().unwrap().is_empty());

    let g = gen(dir.path(), "g.json", &["--kind", "perturbed-order", "--ell", "1", "--c", "1"]);
    let h = gen(dir.path(), "h.json", &["--kind", "perturbed-order", "--ell", "1", "--c", "1", "--which", "second"]);
    let same = acrwl(&["distinguish", "--graph-a", &g, "--node-a", "2", "--graph-b", &h, "--node-b", "2", "--ell", "1", "--c", "1"]);
    assert_eq!(json(&same)["formula"], Value::Null);
    let diff = acrwl(&["distinguish", "--graph-a", &g, "--node-a", "0", "--graph-b", &g, "--node-b", "2", "--ell", "1", "--c", "2"]);
    assert!(json(&diff)["formula"].is_string());
}

#[test]
fn wl_soundness_and_colour_check() {
    let dir = tempfile::tempdir().unwrap();
    let g = gen(dir.path(), "g.json", &["--kind", "perturbed-order", "--ell", "2", "--c", "2"]);
    let out = acrwl(&["wl", "--graph", &g, "--c", "2", "--rounds", "2"]);
    let v = json(&out);
    assert_eq!(v["graphs"][0]["partition_sizes"][0], serde_json::json!([11]));

    let out = acrwl(&["soundness", "--max-nodes", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["data"]["sizes"][2]["graphs"], 64);

    let a = acrwl(&["theorem1", "--ell", "1", "--c", "1", "--graph-trials", "5", "--formula-samples", "20"]);
    let b = acrwl(&["theorem1", "--ell", "1", "--c", "1", "--graph-trials", "5", "--formula-samples", "20"]);
    assert_eq!(a.status.code(), Some(0));
    let strip = |mut v: Value| {
        v["timings_ms"] = Value::Null;
        v
    };
    assert_eq!(strip(json(&a)), strip(json(&b)));
}
