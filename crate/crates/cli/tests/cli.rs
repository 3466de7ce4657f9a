use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cqmkit::problems::blp_weights;
use serde_json::Value;

fn cqmkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqmkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// The last stderr line must be a one-line JSON error object.
fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    let v: Value = serde_json::from_str(line).expect("error line is JSON");
    assert!(v["error"].is_string() && v["message"].is_string(), "{v}");
    v
}

fn min_subset_sum(mu: &[f64], c: usize) -> f64 {
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << mu.len() {
        if mask.count_ones() as usize == c {
            let s: f64 = (0..mu.len()).filter(|&i| mask >> i & 1 == 1).map(|i| mu[i]).sum();
            best = best.min(s);
        }
    }
    best
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let out = cqmkit(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    assert_eq!(stderr_error(&out)["error"], "usage");
}

#[test]
fn version_prints_build_identifier() {
    let out = cqmkit(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cqmkit "));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = cqmkit(&["topo", "--colour", "blue"]);
    assert_eq!(out.status.code(), Some(2));
    stderr_error(&out);
}

#[test]
fn blp_oracle_matches_subset_enumeration() {
    let out = cqmkit(&["oracle", "--family", "blp", "--N", "12", "--C", "4", "--seed", "7"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let expected = min_subset_sum(&blp_weights(12, 7), 4);
    assert!((v["optimum"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn domain_error_exits_1_with_json() {
    let out = cqmkit(&["oracle", "--family", "blp", "--N", "3", "--C", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["exit_code"], 1);
}

#[test]
fn missing_model_file_is_an_io_error() {
    let out = cqmkit(&["solve", "--model", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"], "io");
}

#[test]
fn generate_then_compile() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let m = model.to_str().unwrap();
    let out = cqmkit(&["generate", "--family", "blp-k", "--N", "10", "--C", "4", "--k", "2", "--out", m]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(v["variables"].as_array().unwrap().len(), 10);
    assert_eq!(v["constraints"].as_array().unwrap().len(), 3);

    let out = cqmkit(&["compile", "--model", m]);
    assert!(out.status.success());
    let c = stdout_json(&out);
    assert_eq!(c["num_original"], 10);
    assert_eq!(c["lambdas"].as_object().unwrap().len(), 3);
}

fn write(path: &Path, text: &str) -> String {
    fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn infeasible_model_solves_with_null_best() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        &dir.path().join("m.json"),
        r#"{"variables":[{"id":"a","type":"binary"},{"id":"b","type":"binary"}],
            "objective":{"linear":{"a":1.0},"quadratic":[],"offset":0.0},
            "constraints":[{"label":"too_many","lhs":{"linear":{"a":1.0,"b":1.0}},"sense":"ge","rhs":3.0}]}"#,
    );
    let params = write(&dir.path().join("p.json"), r#"{"time_floor":1.0,"time_limit":1.0,"target":4}"#);
    let out = cqmkit(&["solve", "--model", &model, "--params", &params]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["best_feasible"].is_null());
    assert_eq!(v["feasible_count"], 0);
}

#[test]
fn classical_solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let m = model.to_str().unwrap();
    assert!(cqmkit(&["generate", "--family", "bqp", "--N", "10", "--C", "3", "--out", m]).status.success());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = cqmkit(&["solve", "--model", m, "--solver", "sa", "--reads", "5", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let mut v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        v["sampleset"]["wall_time"] = Value::Null;
        let csv = fs::read_to_string(out.with_extension("csv")).unwrap();
        let energies: Vec<String> = csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect();
        (v, energies)
    };
    let (a, ea) = run("a.json");
    let (b, eb) = run("b.json");
    assert_eq!(a, b);
    assert_eq!(ea, eb);
    assert_eq!(ea[0], "energy,feasible");
    assert_eq!(ea.len(), 6);
    assert!(a["best_feasible"]["feasible"].as_bool().unwrap());
}

#[test]
fn show_params_lists_defaults() {
    let out = cqmkit(&["solve", "--show-params"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["hybrid"]["subsolver"], "sa");
    assert_eq!(v["solver"]["reads"], 100);
}

#[test]
fn topo_stats_for_advantage_scale_graph() {
    let out = cqmkit(&["topo", "--family", "pegasus", "--m", "16", "--defect-rate", "0.05", "--stats"]);
    assert!(out.status.success());
    let s = &stdout_json(&out)["stats"];
    assert_eq!(s["nodes"], 5760);
    assert_eq!(s["active_nodes"], 5472);
    assert!(s["max_degree"].as_u64().unwrap() <= 15);
}

#[test]
fn topo_rejects_other_families() {
    let out = cqmkit(&["topo", "--family", "zephyr"]);
    assert_eq!(out.status.code(), Some(2));
    stderr_error(&out);
}

#[test]
fn bench_writes_artifacts_and_flags_failed_cells() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(
        &dir.path().join("plan.json"),
        r#"{"repeats":2,"cells":[
            {"problem":{"family":"bqp","N":8,"C":2},"solver":"tabu","params":{"reads":2,"sweeps":10}},
            {"problem":{"family":"uc","generators":2,"periods":2},"solver":"sa"}]}"#,
    );
    let out_dir = dir.path().join("out");
    let out = cqmkit(&["bench", "--plan", &plan, "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(out.status.code(), Some(1), "UC needs the hybrid solver, so its runs fail");
    assert_eq!(stderr_error(&out)["error"], "bench_failures");
    let raw = fs::read_to_string(out_dir.join("records.csv")).unwrap();
    assert_eq!(raw.lines().count(), 1 + 4);
    assert!(out_dir.join("aggregate.csv").exists());
    assert!(out_dir.join("bench.json").exists());
}
