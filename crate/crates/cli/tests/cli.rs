use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_expansivity"));
    cmd.env_remove("EXPANSIVITY_BOUNDS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn checks_pass(report: &Value) -> bool {
    report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == Value::Bool(true))
}

#[test]
fn squares_mod_seven() {
    let r = json_of(&["value-set", "--poly", "n^2", "--prime", "7"]);
    assert_eq!(r["results"]["value_set"]["residues"], serde_json::json!([0, 1, 2, 4]));
    assert_eq!(r["results"]["density"], "4/7");
    assert!(checks_pass(&r));
}

#[test]
fn counterexample_table() {
    let r = json_of(&["counterexample", "--poly", "n^2", "--depth", "2", "--kmax", "10"]);
    let rows = r["results"]["progression_bounds"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(r["results"]["blueprint"]["moduli"], serde_json::json!([3, 35]));
    // k = 3 is divisible by the first modulus, so the second level takes over
    assert_eq!(rows[2]["level"], 2);
    assert_eq!(rows[2]["modulus"], 35);
    assert!(checks_pass(&r));
}

#[test]
fn counterexample_deepens_for_fifteen() {
    let r = json_of(&["counterexample", "--depth", "2", "--kmax", "15"]);
    let rows = r["results"]["progression_bounds"].as_array().unwrap();
    assert_eq!(rows[14]["depth"], 3);
    assert!(r["results"]["blueprint_depth_3"].is_object());
    assert!(checks_pass(&r));
}

#[test]
fn increment_on_z4() {
    let r = json_of(&["increment", "--moduli", "4", "--set", "0", "--poly", "n^2", "--eps", "0.3"]);
    let trace = &r["results"]["trace"];
    assert_eq!(trace["status"], "expanded");
    assert_eq!(trace["steps"].as_array().unwrap().len(), 2);
    assert_eq!(trace["final_k"], 4);
    assert!(checks_pass(&r));
}

#[test]
fn pinned_refute_blueprint() {
    let r = json_of(&["pinned-refute", "--k", "3"]);
    assert_eq!(r["results"]["refuter"]["refuted"], true);
    assert_eq!(r["results"]["period"], 105);
    assert!(checks_pass(&r));
}

#[test]
fn reports_share_a_schema() {
    let cases: &[&[&str]] = &[
        &["value-set", "--poly", "n^3", "--modulus", "30"],
        &["deficient-primes", "--poly", "n^2"],
        &["volspec", "--set", "lit:{(0,0),(1,0),(0,1)}"],
        &["spectrum", "--moduli", "3,4", "--action", "standard", "--set", "random:0.4"],
        &["direction", "--moduli", "7,7", "--action", "standard", "--set", "random:0.3"],
        &["weyl", "--poly", "n^2", "--q-max", "10"],
        &["snf", "--matrix", "2,4;6,8"],
        &["bogolyubov", "--set", "grid:0..12", "--kmax", "3", "--radius", "2"],
    ];
    for args in cases {
        let r = json_of(args);
        assert_eq!(r["schema_version"], 1, "{args:?}");
        assert_eq!(r["command"], args[0]);
        assert!(r["seed"].is_u64());
        assert!(r["inputs"].is_object() && r["results"].is_object());
        for c in r["checks"].as_array().unwrap() {
            assert!(c["anchor"].as_str().is_some_and(|s| !s.is_empty()), "{args:?}");
        }
        assert!(checks_pass(&r), "{args:?}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["spectrum", "--moduli", "5,6", "--action", "standard", "--set", "random:0.3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let other = run(&[&args[..], &["--seed", "7"]].concat());
    assert_ne!(a.stdout, other.stdout);
    let c1 = run(&["counterexample", "--kmax", "12"]);
    let c2 = run(&["counterexample", "--kmax", "12"]);
    assert_eq!(c1.stdout, c2.stdout);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let to_file = run(&["snf", "--poly", "2*n; n^2", "--output", path.to_str().unwrap()]);
    assert_eq!(to_file.status.code(), Some(0));
    assert!(to_file.stdout.is_empty());
    let to_stdout = run(&["snf", "--poly", "2*n; n^2"]);
    assert_eq!(fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn sets_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let lattice = dir.path().join("e.txt");
    fs::write(&lattice, "0 1\n4\n").unwrap();
    let spec = format!("file:{}", lattice.display());
    let r = json_of(&["pinned-refute", "--set", &spec, "--k", "1", "--m", "3"]);
    assert_eq!(r["results"]["refuter"]["set_size"], 3);

    let states = dir.path().join("a.txt");
    fs::write(&states, "0\n1:2\n").unwrap();
    let spec = format!("file:{}", states.display());
    let r = json_of(&["spectrum", "--moduli", "2,3", "--action", "standard", "--set", &spec]);
    assert_eq!(r["results"]["set_measure"], "1/3");
}

#[test]
fn text_and_csv_formats() {
    let text = run(&["value-set", "--poly", "n^2", "--prime", "7", "--format", "text"]);
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.starts_with("value-set (seed "));
    assert!(text.contains("[ok] squares_mod_odd_prime"));
    let csv = run(&["weyl", "--poly", "n^2", "--q-max", "5", "--format", "csv"]);
    let csv = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("q,psi"));
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(run(&["snf", "--matrix", "1", "--format", "csv"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["value-set", "--poly", "n^^2", "--prime", "7"]).status.code(), Some(1));
    assert_eq!(run(&["value-set", "--poly", "n^2", "--prime", "7", "--modulus", "5"]).status.code(), Some(1));
    assert_eq!(run(&["deficient-primes", "--poly", "n", "--count", "1"]).status.code(), Some(1));
    assert_eq!(run(&["deficient-primes", "--poly", "n^2", "--count", "50", "--scan-bound", "20"]).status.code(), Some(2));
    assert_eq!(run(&["weyl", "--poly", "n^2", "--q-max", "9", "--target", "0.000001"]).status.code(), Some(2));
    let bounded = bin()
        .env("EXPANSIVITY_BOUNDS", "max_states=10")
        .args(["spectrum", "--moduli", "5,5", "--set", "0"])
        .output()
        .unwrap();
    assert_eq!(bounded.status.code(), Some(2));
    let malformed = bin().env("EXPANSIVITY_BOUNDS", "nonsense").args(["snf", "--matrix", "1"]).output().unwrap();
    assert_eq!(malformed.status.code(), Some(1));
}
