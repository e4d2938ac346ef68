use std::f64::consts::FRAC_PI_4;

use serde_json::Value;
use usd_cli::run;

fn usd(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("usd").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn usd_json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = usd(args);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("bad JSON ({e}): {out}\n{err}"));
    (code, v)
}

#[test]
fn idp_same_basis() {
    let (code, v) = usd_json(&["idp", "--family", "same-basis", "--theta0", "0.5235988", "--theta1", "1.0471976"]);
    assert_eq!(code, 0);
    assert!((v["p_fidp"].as_f64().unwrap() - 0.8660254).abs() < 1e-6);
}

#[test]
fn idp_degrees() {
    let (code, v) = usd_json(&["idp", "--family", "same-basis", "--theta0", "30", "--theta1", "60", "--deg"]);
    assert_eq!(code, 0);
    assert!((v["p_fidp"].as_f64().unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-12);
}

#[test]
fn solve_two_fail_same_basis() {
    let (code, out, err) = usd(&["solve", "two-fail", "--family", "same-basis", "--theta1", "0.5", "--theta0", "1.0707963"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("snapped"));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["p_f"].as_f64().unwrap() - 0.841471).abs() < 1e-6);
    assert_eq!(v["scheme_kind"], "two-fail");
}

#[test]
fn solve_two_fail_infeasible_exit_2() {
    let (code, v) = usd_json(&["solve", "two-fail", "--family", "same-basis", "--theta0", "0.3", "--theta1", "0.5"]);
    assert_eq!(code, 2);
    assert_eq!(v["feasible"], false);
}

#[test]
fn solve_no_comm_detector() {
    let (code, v) = usd_json(&["solve", "no-comm", "--state0", "1,0,0,0", "--state1", "0.70710678,0,0,0.70710678"]);
    assert_eq!(code, 0);
    assert_eq!(v["case"], "OneStateDetector");
    assert!((v["detect_prob"].as_f64().unwrap() - 0.5).abs() < 1e-7);
}

#[test]
fn solve_no_comm_always_fail_exit_2() {
    let (code, v) = usd_json(&["solve", "no-comm", "--state0", "0.6,0,0,0.8", "--state1", "0.8,0,0,-0.6"]);
    assert_eq!(code, 2);
    assert_eq!(v["case"], "AlwaysFail");
}

#[test]
fn solve_one_fail_same_basis() {
    let t1 = format!("{}", -FRAC_PI_4);
    let (code, v) = usd_json(&["solve", "one-fail", "--family", "same-basis", "--theta0", "0.7853981633974483", "--theta1", &t1]);
    assert_eq!(code, 0);
    assert!((v["p_f"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn curve_fig1_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.csv");
    let (code, _, _) = usd(&["curve", "fig1", "--steps", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["theta1", "p_f", "p_fidp"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 200);
    for r in &rows {
        let pf: f64 = r[1].parse().unwrap();
        let pidp: f64 = r[2].parse().unwrap();
        assert!(pf >= pidp - 1e-12, "{r:?}");
    }
}

#[test]
fn curve_fig2_stdout_has_quarter() {
    let (code, out, _) = usd(&["curve", "fig2", "--steps", "200", "--out", "-"]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let hit = rdr
        .records()
        .map(|r| r.unwrap())
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap()))
        .find(|(t, _, _)| (t - FRAC_PI_4).abs() < 1e-9)
        .expect("row at π/4");
    assert!((hit.1 - 0.25).abs() < 1e-9);
    assert!(hit.2.abs() < 1e-9);
}

#[test]
fn curve_steps_one_rejected() {
    assert_eq!(usd(&["curve", "fig1", "--steps", "1"]).0, 3);
}

#[test]
fn invalid_inputs_exit_3() {
    assert_eq!(usd(&["idp", "--family", "same-basis", "--theta0", "1", "--state0", "1,0,0,0"]).0, 3);
    assert_eq!(usd(&["idp", "--bogus"]).0, 3);
    assert_eq!(usd(&["idp", "--state0", "0,0,0,0", "--state1", "1,0,0,0"]).0, 3);
    assert_eq!(usd(&["idp", "--state0", "1,x,0,0", "--state1", "1,0,0,0"]).0, 3);
    assert_eq!(usd(&["idp", "--family", "same-basis", "--theta0", "1"]).0, 3);
    assert_eq!(usd(&["qss", "--theta", "0.5", "--q-check", "1.5"]).0, 3);
}

#[test]
fn io_error_exit_4() {
    let (code, _, err) = usd(&["curve", "fig1", "--steps", "10", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn help_exits_zero() {
    assert_eq!(usd(&["--help"]).0, 0);
}

#[test]
fn schmidt_bell() {
    let (code, v) = usd_json(&["schmidt", "--state0", "0.70710678118654752,0,0,0.70710678118654752"]);
    assert_eq!(code, 0);
    assert_eq!(v["state0"]["degenerate"], true);
}

#[test]
fn verify_default_and_only() {
    let (code, v) = usd_json(&["verify"]);
    assert_eq!(code, 0);
    assert_eq!(v["passed"], true);
    let (code, v) = usd_json(&["verify", "--only", "twofail"]);
    assert_eq!(code, 0);
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["group"] == "twofail"));
}

#[test]
fn verify_large_mc_has_sigma_check() {
    let (code, v) = usd_json(&["verify", "--mc-rounds", "1000000", "--seed", "7", "--only", "sampler"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.contains("4sigma")), "{names:?}");
}

#[test]
fn identical_seeds_identical_output() {
    let args = ["mc", "--family", "xz-mixed", "--theta0", "1.5707963267948966", "--theta1", "0.8", "--rounds", "70000", "--seed", "11"];
    assert_eq!(usd(&args).1, usd(&args).1);
    let q = ["qss", "--theta", "0.4", "--rounds", "50000", "--adversary", "eve-subspace", "--seed", "3"];
    let (c1, a, _) = usd(&q);
    assert_eq!(c1, 0);
    assert_eq!(a, usd(&q).1);
    let other = ["mc", "--family", "xz-mixed", "--theta0", "1.5707963267948966", "--theta1", "0.8", "--rounds", "70000", "--seed", "12"];
    assert_ne!(usd(&args).1, usd(&other).1);
}

#[test]
fn qss_log_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rounds.csv");
    let (code, v) = usd_json(&["qss", "--theta", "0.5", "--rounds", "500", "--log", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["n_rounds"], 500);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("round,true_state,alice_basis,bob_basis,alice_outcome,bob_outcome,label\n"));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn qss_bob_capture_flagged() {
    let (code, v) = usd_json(&["qss", "--theta", "0.5", "--rounds", "100000", "--adversary", "bob-sequential", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], "CheatSuspected");
}
