use std::io::Write;
use std::process::{Command, Output, Stdio};

use lsipp_core::relax::build_moment;
use lsipp_core::sdp::sdpa::read_sdpa;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lsipp");

fn problem(name: &str) -> String {
    format!("{}/problems/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(BIN)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn solve_json(args: &[&str], stdin: Option<&str>) -> Value {
    let out = run(args, stdin);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn row(rec: &Value, k: u64) -> &Value {
    rec["rows"].as_array().unwrap().iter().find(|r| r["k"] == k).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("solve_ms");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn solve_ex37_certifies_at_order_four() {
    let rec = solve_json(&["solve", &problem("ex37")], None);
    let r = row(&rec, 4);
    assert!((r["value"].as_f64().unwrap() + 1.7869).abs() < 1e-3);
    assert_eq!(r["certified"], true);
    assert_eq!(rec["rows"].as_array().unwrap().last().unwrap()["k"], 4);
}

#[test]
fn solve_ex34_homogenized() {
    let rec = solve_json(&["solve", &problem("ex34"), "--homogenize", "on"], None);
    assert_eq!(rec["path"], "homogenized");
    let r = row(&rec, 3);
    assert!((r["value"].as_f64().unwrap() + 0.75).abs() < 1e-3);
    assert_eq!(r["certified"], true);
    assert!(row(&rec, 2)["value"].as_f64().unwrap().abs() < 1e-5);
}

#[test]
fn solve_ex46_reports_four_minimizers() {
    let rec = solve_json(&["solve", &problem("ex46")], None);
    let fin = &rec["final"];
    assert!((fin["best_value"].as_f64().unwrap() - 3.618034).abs() < 1e-4);
    assert_eq!(fin["minimizers"].as_array().unwrap().len(), 4);
    assert_eq!(fin["witness"]["verdict"], "Supported");
}

#[test]
fn gen_pipes_into_solve() {
    let gen = run(&["gen", "--m", "5", "--n", "3", "--t", "2", "--seed", "7"], None);
    assert!(gen.status.success());
    let text = String::from_utf8(gen.stdout).unwrap();
    let rec = solve_json(&["solve", "-"], Some(&text));
    let rows = rec["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["status"] == "Optimal"));
}

#[test]
fn output_is_deterministic_up_to_timing() {
    let args = ["solve", &problem("ex38") as &str, "--kmax", "3"];
    let mut a = solve_json(&args, None);
    let mut b = solve_json(&args, None);
    strip_timing(&mut a);
    strip_timing(&mut b);
    assert_eq!(a, b);
}

#[test]
fn knobs_are_echoed() {
    let rec = solve_json(
        &["solve", &problem("ex38"), "--tol", "1e-8", "--rank-tol", "2e-3", "--seed", "11"],
        None,
    );
    let t = &rec["final"]["tolerances"];
    assert_eq!(t["solver"]["tol"], 1e-8);
    assert_eq!(t["cert"]["rank_tol"], 2e-3);
    assert_eq!(rec["final"]["seed"], 11);
}

#[test]
fn out_and_csv_files() {
    let dir = std::env::temp_dir().join(format!("lsipp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("r.json");
    let csv = dir.join("r.csv");
    let o = run(
        &["solve", &problem("ex38"), "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()],
        None,
    );
    assert!(o.status.success());
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rec["final"]["best_k"], 3);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("k,value,sos_value,status"));
    assert_eq!(lines.len(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn malformed_json_names_the_field() {
    let o = run(&["solve", "-"], Some(r#"{"nvars": 1, "c": [1], "a": [3], "b": "1"}"#));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a[0]"));

    let o = run(&["solve", "-"], Some(r#"{"nvars": 1, "c": [1], "a": ["1"], "b": "1", "bogus": 0}"#));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let o = run(&["solve", "-"], Some(r#"{"nvars": 1, "c": [1], "a": ["1 + Z"], "b": "1"}"#));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&[], None).status.code(), Some(1));
    assert_eq!(run(&["solve"], None).status.code(), Some(1));
    assert_eq!(run(&["solve", &problem("ex37"), "--kmin", "2"], None).status.code(), Some(1));
    assert_eq!(run(&["gen", "--m", "1", "--n", "1", "--t", "1"], None).status.code(), Some(1));
    assert_eq!(run(&["solve", "/nonexistent.json"], None).status.code(), Some(1));
}

#[test]
fn failure_at_every_order_exits_two() {
    // min x with no constraint on x: every moment relaxation is infeasible.
    let text = r#"{"nvars": 1, "c": [1], "a": ["0"], "b": "1",
                  "generators": ["Y1", "1 - Y1"], "flags": {"compact": true}}"#;
    let o = run(&["solve", "-"], Some(text));
    assert_eq!(o.status.code(), Some(2));
    let rec: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rec["rows"].as_array().unwrap().iter().all(|r| r["status"] != "Optimal"));
}

#[test]
fn sdpa_export_round_trips() {
    let o = run(&["export-sdpa", &problem("ex38"), "--k", "3"], None);
    assert!(o.status.success());
    let back = read_sdpa(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let text = std::fs::read_to_string(problem("ex38")).unwrap();
    let prob = match lsipp_cli::load_problem(&text, &Default::default()).unwrap().0 {
        lsipp_cli::Problem::Lsipp(p) => p,
        _ => unreachable!(),
    };
    let rel = build_moment(&prob, 3).unwrap();
    assert_eq!(back.blocks, rel.sdp.blocks);
    assert_eq!(back.objective, rel.sdp.objective);
    assert_eq!(back.equalities.len(), rel.sdp.equalities.len());
    // moment block plus one localizer per generator
    assert_eq!(back.blocks.len(), 1 + prob.gens.len());
}

#[test]
fn homogenized_export_adds_the_y0_localizer() {
    let o = run(&["export-sdpa", &problem("ex34"), "--k", "3"], None);
    assert!(o.status.success());
    let back = read_sdpa(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(back.blocks.len(), 1 + 2 + 1);
    assert_eq!(back.blocks.last().unwrap().label, "localizer g3");
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"], None);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("PASS").count(), 4);
}
