use std::path::PathBuf;
use std::process::{Command, Output};

fn gasket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasket")).args(args).output().expect("spawn gasket")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

/// Rows as header-keyed maps.
fn records(csv_text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let h = r.headers().unwrap().clone();
    r.records().map(|rec| h.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn level_one_quantum_exit_table() {
    let out = stdout(&gasket(&["exit-dist", "--coin", "quantum", "--level", "1"]));
    let rows = records(&out);
    assert_eq!(rows.len(), 80);
    let eighth = rows.iter().filter(|r| (num(&r["value"]) - 0.125).abs() < 1e-10).count();
    let twelfth = rows.iter().filter(|r| (num(&r["value"]) - 1.0 / 12.0).abs() < 1e-10).count();
    assert!(eighth > 0 && twelfth > 0);
    assert!(out.contains("0.0833333"));
    assert!(rows.iter().filter(|r| r["exact"] == "1/8").count() == eighth);
}

#[test]
fn classical_delta_from_the_cli() {
    let out = stdout(&gasket(&["exponents", "--coin", "classical", "--levels", "2..20"]));
    let rows = records(&out);
    let delta = rows.iter().find(|r| r["exponent"] == "delta").unwrap();
    let want = (5f64.ln() - 3f64.ln()) / 2f64.ln();
    assert!((num(&delta["slope"]) - want).abs() < 1e-6);
    assert!((num(&delta["slope"]) - 0.7370).abs() < 5e-4);
}

#[test]
fn bad_levels_are_usage_errors() {
    for args in [
        &["exit-dist", "--levels", "0"][..],
        &["exit-dist", "--levels", ""],
        &["exit-dist", "--levels", "5..2"],
        &["exit-dist"],
        &["passage", "--level", "1", "--observable", "speed"],
        &["lattice", "--levels", "1..3"],
    ] {
        let o = gasket(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let args = ["exit-dist", "--levels", "1..3", "--nodes", "1024"];
    assert_eq!(gasket(&args).stdout, gasket(&args).stdout);
    let mc = ["recurrence", "--levels", "2", "--scheme", "mc", "--mc-samples", "2000", "--seed", "7"];
    let a = stdout(&gasket(&mc));
    assert_eq!(a, stdout(&gasket(&mc)));
    let other = ["recurrence", "--levels", "2", "--scheme", "mc", "--mc-samples", "2000", "--seed", "8"];
    assert_ne!(a, stdout(&gasket(&other)));
    assert!(records(&a).iter().all(|r| !r["std_err"].is_empty()));
}

#[test]
fn phi_series_is_linear() {
    let rows = records(&stdout(&gasket(&["plot-data", "--coin", "classical", "--family", "phi", "--levels", "1..12"])));
    assert_eq!(rows.len(), 12);
    let step = (1.0f64 / 0.6).ln();
    for w in rows.windows(2) {
        assert!((num(&w[1]["neg_log_value"]) - num(&w[0]["neg_log_value"]) - step).abs() < 1e-12);
        assert!((num(&w[1]["fitted_line"]) - num(&w[0]["fitted_line"]) - step).abs() < 1e-10);
    }
    for r in &rows {
        assert!((num(&r["fitted_line"]) - num(&r["neg_log_value"])).abs() < 1e-10);
    }
}

#[test]
fn single_level_series_has_no_fit() {
    let rows = records(&stdout(&gasket(&["plot-data", "--coin", "classical", "--family", "phi", "--levels", "3"])));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["n"], "3");
    assert!(rows[0]["fitted_line"].is_empty());
}

#[test]
fn manifest_records_config_and_exclusions() {
    let path = tmp("exit1.csv");
    let o = gasket(&["exit-dist", "--level", "1", "-o", path.to_str().unwrap()]);
    stdout(&o);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp("exit1.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["command"], "exit-dist");
    assert_eq!(m["config"]["quadrature"]["nodes"], 4096);
    for k in ["conservation", "limit_gap", "imag_residue", "passage_level_cap"] {
        assert!(m["config"]["tolerances"].get(k).is_some(), "{k}");
    }
    let ex = m["exclusions"].as_array().unwrap();
    assert_eq!(ex.len(), 1);
    assert_eq!(ex[0]["nodes"], 1);
    assert_eq!(m["checks"][0]["name"], "exit_total_excess");
    assert_eq!(m["checks"][0]["passed"], true);
    assert!(!m["timings"].as_array().unwrap().is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("n,target,i,j,value,exact\n"));
}

#[test]
fn failed_check_exits_with_validation_code() {
    let o = gasket(&["passage", "--level", "1", "--observable", "etime", "--nodes", "1024", "--imag-residue-tol=-1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("imag_residue"));
}

#[test]
fn math_errors_name_their_context() {
    let o = gasket(&["passage", "--level", "5"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("level 5") && err.contains("cap"));
}

#[test]
fn flags_override_config_file() {
    let cfg = tmp("run.toml");
    std::fs::write(&cfg, "coin = \"classical\"\nlevels = \"2..8\"\n[output]\nformat = \"json\"\n").unwrap();
    let json_out = stdout(&gasket(&["exponents", "--config", cfg.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&json_out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 34);
    let csv_out = stdout(&gasket(&["exponents", "--config", cfg.to_str().unwrap(), "--format", "csv", "--levels", "2..6"]));
    let rows = records(&csv_out);
    let beta = rows.iter().find(|r| r["exponent"] == "beta").unwrap();
    assert_eq!(beta["points"], "5");
    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    assert_eq!(gasket(&["exponents", "--config", cfg.to_str().unwrap(), "--levels", "2"]).status.code(), Some(2));
}

#[test]
fn passage_golden_column() {
    let rows = records(&stdout(&gasket(&["passage", "--level", "1", "--observable", "prob"])));
    let totals: Vec<_> = rows.iter().filter(|r| r["quantity"] == "total").collect();
    assert_eq!(totals.len(), 4);
    assert!(totals.iter().all(|r| r["exact"] == "319/528"));
}

#[test]
fn oracle_ledger() {
    let out = stdout(&gasket(&["oracle", "--level", "1", "--start", "0,0,e0", "--tmax", "60", "--absorb", "T"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["absorb"], "T");
    assert!(v["max_mass_defect"].as_f64().unwrap() < 1e-10);
    let p = v["captured_total"].as_f64().unwrap();
    assert!((p - 319.0 / 528.0).abs() < 1e-6, "{p}");
    assert!(!v["captures"].as_array().unwrap().is_empty());
    assert_eq!(gasket(&["oracle", "--level", "1", "--start", "0,0"]).status.code(), Some(2));
}

#[test]
fn lattice_dump() {
    let rows = records(&stdout(&gasket(&["lattice", "--level", "2"])));
    assert_eq!(rows.len(), 29);
    assert!(rows.iter().any(|r| r["x1"] == "0" && r["x2"] == "0" && r["out_dirs"] == "0 1 4 5"));
}

#[test]
fn classical_orbits_carry_exact_values() {
    let rows = records(&stdout(&gasket(&["classical", "--observable", "triple", "--levels", "2"])));
    assert_eq!((rows[1]["u1_exact"].as_str(), rows[1]["u2_exact"].as_str(), rows[1]["u3_exact"].as_str()), ("1/20", "1/25", "4/25"));
    let e = records(&stdout(&gasket(&["classical", "--observable", "exponents", "--levels", "3"])));
    let dw = e.iter().find(|r| r["quantity"] == "d_w").unwrap();
    assert!((num(&dw["value"]) - 5f64.ln() / 2f64.ln()).abs() < 1e-9);
}
