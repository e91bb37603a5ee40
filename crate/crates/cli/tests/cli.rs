use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnbellman")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnbellman")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn constants_endpoints() {
    let v = json(&["constants", "--p", "1,2", "--format", "json"]);
    assert!((num(&v[0]["eps0"]) - 2.0 / std::f64::consts::E).abs() < 1e-15);
    assert_eq!(num(&v[1]["eps0"]), 1.0);
    let text = stdout(&run(&["constants", "--p", "1,2"]));
    assert!(text.contains("0.735759"), "{text}");
}

#[test]
fn constants_sharp_c_and_bracket() {
    let v = json(&["constants", "--p", "2", "--eps", "0.5", "-f", "json"]);
    let expected = (-0.5f64).exp() / 0.5;
    assert!((num(&v[0]["C"]) - expected).abs() <= 1e-15 * expected);
    let v = json(&["constants", "--p", "1", "--eps", "0.5", "-f", "json"]);
    assert!(v[0]["C"].is_null());
    assert!(num(&v[0]["C_lower"]) <= num(&v[0]["C_upper"]));
}

#[test]
fn constants_rejects_p_out_of_range() {
    assert_eq!(run(&["constants", "--p", "2.5"]).status.code(), Some(2));
}

#[test]
fn csv_has_header_and_full_precision() {
    let o = run(&["constants", "--p", "2", "--eps", "0.5", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,eps0,eps,C,C_lower,C_upper"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let c: f64 = row[3].parse().unwrap();
    assert_eq!(c, (-0.5f64).exp() / 0.5);
    assert_eq!(row[3].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn bellman_quadratic_candidate_at_the_top() {
    let v = json(&["bellman", "--kind", "b_p", "--p", "2", "--C", "2", "--x", "0", "2", "-f", "json"]);
    let xi = num(&v["xi_plus"]);
    assert!((num(&v["value"]) - xi * xi).abs() <= 1e-14);
    assert_eq!(v["below_threshold"], Value::Bool(false));
}

#[test]
fn bellman_exponential_candidate_reproduces_c() {
    let v = json(&["bellman", "--kind", "A", "--delta", "1", "--C", "2", "--x", "0", "2", "-f", "json"]);
    assert!((num(&v["value"]) - 2.0).abs() <= 1e-12);
}

#[test]
fn bellman_weak_type_reports_region() {
    let v = json(&["bellman", "--kind", "D", "--lambda", "0", "--C", "2", "--x", "0", "2", "-f", "json"]);
    let d = num(&v["value"]);
    assert!((0.0..=1.0).contains(&d));
    assert_eq!(v["region"], Value::String("Omega3".into()));
}

#[test]
fn bellman_errors_exit_two() {
    assert_eq!(run(&["bellman", "--kind", "A", "--delta", "1", "--C", "2", "--x", "0", "3"]).status.code(), Some(2));
    assert_eq!(run(&["bellman", "--kind", "b_p", "--C", "2", "--x", "0", "2"]).status.code(), Some(2));
    assert_eq!(run(&["bellman", "--kind", "nope", "--C", "2", "--x", "0", "2"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn optimizer_phi_plus_to_file() {
    let path = std::env::temp_dir().join(format!("jnbellman-phi-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let o = run(&["optimizer", "--kind", "phi+", "--C", "2", "--x", "0", "2", "-o", p]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    let pieces = v["function"]["pieces"].as_array().unwrap();
    assert_eq!(pieces.len(), 1);
    assert_eq!(pieces[0]["kind"], Value::String("LogRamp".into()));
    assert!((num(&pieces[0]["alpha"]) - 1.0).abs() < 1e-15);
    assert!(num(&v["averages"]["mean"]).abs() < 1e-12);
    assert!((num(&v["averages"]["exp_mean"]) - 2.0).abs() < 1e-12);
    assert!((num(&v["characteristic"]["value"]) - 2.0).abs() < 1e-9);
}

#[test]
fn optimizer_psi_is_a_three_step() {
    let v = json(&["optimizer", "--kind", "psi", "--C", "2", "--x", "0", "2", "-f", "json"]);
    let pieces = v["function"]["pieces"].as_array().unwrap();
    assert_eq!(pieces.len(), 3);
    let width: f64 = pieces.iter().map(|p| num(&p["hi"]) - num(&p["lo"])).sum();
    assert!((width - 1.0).abs() < 1e-15);
    assert!(pieces.iter().all(|p| p["kind"] == "Constant"));
}

#[test]
fn optimizer_eta_realizes_the_weak_type_candidate() {
    let v = json(&["optimizer", "--kind", "eta", "--lambda", "1", "--C", "2", "--x", "0", "2", "-f", "json"]);
    let d = json(&["bellman", "--kind", "D", "--lambda", "1", "--C", "2", "--x", "0", "2", "-f", "json"]);
    assert!((num(&v["averages"]["f_mean"]) - num(&d["value"])).abs() < 1e-12);
    assert_eq!(run(&["optimizer", "--kind", "eta", "--C", "2", "--x", "0", "2"]).status.code(), Some(2));
}

#[test]
fn optimizer_write_failure_exits_three() {
    let o = run(&["optimizer", "--kind", "psi", "--C", "2", "--x", "0", "2", "-o", "/nonexistent-dir/x/phi.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_boundary_passes() {
    let o = run(&["verify", "--suite", "boundary"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn verify_unknown_suite_exits_two() {
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--suite", "optimizers", "--seed", "42", "--samples", "100", "-f", "json"];
    let a = run(&args);
    let b = run_env(&args, "JNBELLMAN_THREADS", "1");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v[0]["passed"], Value::Bool(true));
}

#[test]
fn bad_thread_count_exits_two() {
    assert_eq!(run_env(&["constants", "--p", "1"], "JNBELLMAN_THREADS", "zero").status.code(), Some(2));
}

#[test]
fn tabulate_emits_grid_csv() {
    let o = run(&["tabulate", "--kind", "b1", "--C", "3", "--x1", "-1:1:3", "--ratio", "1:3:5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ratio,x1,x2,value,region,u_plus,u_minus,v"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    // on Gamma_1 the candidate is |x1|
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[3].parse::<f64>().unwrap(), 1.0);
    assert_eq!(run(&["tabulate", "--kind", "b1", "--C", "3", "--ratio", "0.5:3:2"]).status.code(), Some(2));
}
