use std::path::Path;
use std::process::Command;

use magspec_cli::run_with;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["magspec"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn header_value<'a>(csv: &'a str, key: &str) -> &'a str {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in header"))
}

const SHORT: &[&str] = &["branches", "--n", "0..1", "--eta", "-1..1:0.5"];

#[test]
fn branches_csv_matches_known_values() {
    let (code, out, err) = run(&["branches", "--bc", "neumann", "--n", "0..1", "--eta", "0..0:1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("# magspec "));
    header_value(&out, "config-hash");
    header_value(&out, "grid");
    let rows = body(&out);
    assert_eq!(rows[0], "bc,n,eta,lambda,u,du,dlambda_deta");
    assert_eq!(rows.len(), 3);
    for (row, want) in rows[1..].iter().zip([1.0, 5.0]) {
        let lam: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((lam - want).abs() < 1e-6, "{row}");
    }
    assert!(!out.contains('\r'));
}

#[test]
fn lattice_points_print_as_decimals() {
    let (code, out, _) = run(&["branches", "--n", "0", "--eta", "-2..-1.9:0.05"]);
    assert_eq!(code, 0);
    assert!(out.contains("dirichlet,0,-1.9,"), "{out}");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = run(SHORT);
    let b = run(SHORT);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn cache_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let (_, plain, _) = run(SHORT);
    let with = |extra: &[&str]| {
        let mut args = SHORT.to_vec();
        args.extend_from_slice(extra);
        run(&args)
    };
    let (c1, cold, _) = with(&["--cache", cache]);
    let (c2, warm, _) = with(&["--cache", cache]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(plain, cold);
    assert_eq!(plain, warm);
    let lines = std::fs::read_to_string(dir.path().join("branches.jsonl")).unwrap();
    // 2 branches x 5 points, written once.
    assert_eq!(lines.lines().count(), 10);
}

#[test]
fn changing_the_grid_changes_the_fingerprint() {
    let (_, a, _) = run(&["branches", "--n", "0", "--eta", "0..0:1"]);
    let (_, b, _) = run(&["branches", "--n", "0", "--eta", "0..0:1", "--grid-step", "0.004"]);
    assert_ne!(header_value(&a, "grid"), header_value(&b, "grid"));
    assert_ne!(header_value(&a, "config-hash"), header_value(&b, "config-hash"));
}

#[test]
fn config_file_fills_in_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"bc": "neumann", "n": "0", "eta": "0..0:1"}"#).unwrap();
    let p = path.to_str().unwrap();
    let (code, out, err) = run(&["branches", "--config", p]);
    assert_eq!(code, 0, "{err}");
    assert!(body(&out)[1].starts_with("neumann,0,0.0,"));
    let (_, out, _) = run(&["branches", "--config", p, "--bc", "dirichlet"]);
    assert!(body(&out)[1].starts_with("dirichlet,0,0.0,"));
    // Same experiment spelled two ways hashes alike.
    let (_, direct, _) = run(&["branches", "--bc", "dirichlet", "--n", "0", "--eta", "0..0:1"]);
    assert_eq!(out, direct);
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"colour": "blue"}"#).unwrap();
    let (code, _, err) = run(&["branches", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["bogus"]).0, 2);
    assert_eq!(run(&["branches", "--bogus"]).0, 2);
    assert_eq!(run(&["branches", "--eta", "0..1"]).0, 2);
    assert_eq!(run(&["branches", "--bc", "robin:oops"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn numerical_errors_exit_1_with_the_diagnostic() {
    let (code, _, err) = run(&["billiard", "--eta-start", "1.5"]);
    assert_eq!(code, 1);
    assert_eq!(err.trim(), "error: invalid parameter `eta`: a boundary start needs |eta| < 1");
    let (code, _, err) = run(&["branches", "--grid-step", "-1"]);
    assert_eq!(code, 1);
    assert!(err.contains("step"), "{err}");
}

#[test]
fn bound_correction_json_records() {
    let (code, out, err) = run(&[
        "bound-correction", "--tau", "1", "--hbar", "0.5,0.2", "--method", "both", "--format", "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["header"]["tool"], "magspec");
    let recs = v["records"].as_array().unwrap();
    assert_eq!(recs.len(), 4);
    for key in ["bc", "tau", "hbar", "method", "value", "quad_error", "truncation"] {
        assert!(recs[0].get(key).is_some(), "missing {key}");
    }
    // Both forms of the same quantity agree within their error bars.
    for pair in recs.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert_ne!(a["method"], b["method"]);
        let diff = (a["value"].as_f64().unwrap() - b["value"].as_f64().unwrap()).abs();
        let bar = a["quad_error"].as_f64().unwrap() + b["quad_error"].as_f64().unwrap();
        assert!(diff <= bar + 1e-12, "{diff} > {bar}");
    }
    let k = v["meta"]["kappa0_limit"].as_f64().unwrap();
    assert!((k + 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn asymptotics_reports_fit_and_regimes() {
    let (code, out, err) = run(&["asymptotics", "--bc", "neumann", "--n", "0", "--eta", "-4..3:1"]);
    assert_eq!(code, 0, "{err}");
    let fit: Value = serde_json::from_str(header_value(&out, "fit_n0")).unwrap();
    let (c0, theory) = (fit["c0"].as_f64().unwrap(), fit["theory"].as_f64().unwrap());
    assert!((c0 / theory - 1.0).abs() < 0.1, "{c0} vs {theory}");
    let rows = body(&out);
    assert!(rows.iter().any(|r| r.ends_with(",airy")));
    assert!(rows.iter().any(|r| r.ends_with(",transition")));
    assert!(rows.iter().any(|r| r.ends_with(",tunneling")));
}

#[test]
fn density_profile_decays_into_the_bulk() {
    let (code, out, err) = run(&["density-profile", "--bc", "dirichlet", "--x1", "0..1:0.25"]);
    assert_eq!(code, 0, "{err}");
    let rows = body(&out);
    assert_eq!(rows.len(), 6);
    let vals: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // Dirichlet empties the boundary, and the defect is gone 8 magnetic lengths in.
    assert!(vals[0] < 0.0);
    assert!(vals[4].abs() < 1e-6 * vals[0].abs());
    header_value(&out, "trace_defect");
}

#[test]
fn count_compare_rows_per_resolution() {
    let (code, out, err) = run(&["count-compare", "--h", "0.2", "--oracle-div", "4,8"]);
    assert_eq!(code, 0, "{err}");
    let rows = body(&out);
    assert_eq!(rows[0], "oracle_step,unknowns,oracle,two_term,bulk,boundary");
    assert_eq!(rows.len(), 3);
}

#[test]
fn billiard_writes_trajectory_and_hops() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, _, err) = run(&["billiard", "--duration", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let traj = std::fs::read_to_string(out.join("billiard.csv")).unwrap();
    let hops = std::fs::read_to_string(out.join("billiard-hops.csv")).unwrap();
    assert_eq!(body(&traj)[0], "t,x1,x2,xi1,xi2,event_flag");
    // eta = 0 hops last pi / (2 mu) with mu = 10.
    let first: Vec<f64> = body(&hops)[1].split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect();
    assert!((first[2] - std::f64::consts::PI / 20.0).abs() < 1e-6, "{first:?}");
    assert_eq!(header_value(&traj, "grid"), header_value(&hops, "grid"));
}

#[test]
fn single_portrait_passes() {
    let (code, out, err) = run(&["portraits", "--portrait", "b-linear"]);
    assert_eq!(code, 0, "{err}");
    let rows = body(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("b-linear,"));
    assert!(rows[1].ends_with(",true"), "{}", rows[1]);
    assert!(err.contains("pass --out"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magspec"))
}

#[test]
fn binary_exit_codes() {
    let s = binary().arg("--nope").output().unwrap();
    assert_eq!(s.status.code(), Some(2));
    let s = binary().args(["billiard", "--eta-start", "2"]).output().unwrap();
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = binary()
        .args(["branches", "--n", "0", "--eta", "0..0.01:0.01"])
        .env("MAGSPEC_CACHE", dir.path())
        .output()
        .unwrap();
    assert_eq!(s.status.code(), Some(0));
    assert!(Path::new(&dir.path().join("branches.jsonl")).exists());
}

#[test]
fn validate_on_a_clean_build_exits_0() {
    let s = binary().args(["validate", "--jobs", "2"]).output().unwrap();
    let out = String::from_utf8_lossy(&s.stdout);
    assert_eq!(s.status.code(), Some(0), "{out}{}", String::from_utf8_lossy(&s.stderr));
    assert!(body(&out).iter().skip(1).all(|r| r.split(',').nth(1) == Some("true")), "{out}");
}
