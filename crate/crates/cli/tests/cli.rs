use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conic-moduli"));
    c.env_remove("CONIC_MODULI_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

/// Data lines of a stamped CSV: comment first, then header, then rows.
fn csv_rows(text: &str) -> (String, Vec<String>) {
    let mut lines = text.lines();
    let stamp = lines.next().unwrap();
    assert!(stamp.starts_with("# conic-moduli "), "{stamp}");
    let header = lines.next().unwrap().to_string();
    (header, lines.map(String::from).collect())
}

#[test]
fn faces_k3_csv_has_four_rows() {
    let o = run(&["faces", "--k", "3", "--format", "csv"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, "encoding,codimension,height");
    assert_eq!(rows, ["(1 2 3),1,0", "((1 2) 3),2,1", "((1 3) 2),2,1", "(1 (2 3)),2,1"]);
}

#[test]
fn faces_augmented_and_cmax_counts() {
    assert_eq!(json(&["faces", "--k", "3", "--augmented"])["result"]["count"], 32);
    assert_eq!(json(&["faces", "--k", "3", "--cmax"])["result"]["count"], 7);
}

#[test]
fn cones_classify_four_point_sphere() {
    let v = json(&["cones", "classify", "--genus", "0", "--curvature", "1", "--beta", "1/2,2/3,2/3,5/6"]);
    let verdicts = v["result"]["verdicts"].as_array().unwrap();
    let find = |blocks: Value| verdicts.iter().find(|r| r["blocks"] == blocks).unwrap().clone();
    let a = find(serde_json::json!([[1, 4]]));
    assert_eq!(a["status"], "troyanov-violated");
    assert_eq!(a["at_equality"], true);
    assert_eq!(a["merged_betas"], serde_json::json!(["2/3", "2/3", "1/3"]));
    assert_eq!(find(serde_json::json!([[2, 3]]))["status"], "troyanov-violated");
    assert_eq!(find(serde_json::json!([[2, 4]]))["status"], "admissible");
    assert_eq!(find(serde_json::json!([[1, 4], [2, 3]]))["status"], "football-boundary");
    assert_eq!(v["result"]["troyanov"]["holds"], true);
}

#[test]
fn cones_negative_curvature_flag() {
    let v = json(&["cones", "classify", "--genus", "2", "--curvature", "-1", "--beta", "3/5,3/5"]);
    assert_eq!(v["result"]["verdicts"][0]["merged_betas"], serde_json::json!(["1/5"]));
}

#[test]
fn malformed_beta_exits_2() {
    let o = run(&["cones", "classify", "--beta", "0.x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.x"));
    assert_eq!(run(&["flat", "expand", "--beta1", "1/0"]).status.code(), Some(2));
    assert_eq!(run(&["faces", "--k", "many"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_1() {
    // The round sphere sits on the spectral threshold, so the guard refuses.
    let o = run(&["solve", "spherical", "--model", "round", "--mesh", "64x8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spectral gap"));
    assert!(run(&["solve", "spherical", "--model", "round", "--mesh", "64x8", "--no-guard"]).status.success());
}

#[test]
fn identical_runs_are_byte_identical() {
    for args in [
        &["charts", "verify", "--samples", "300", "--seed", "11"][..],
        &["phg", "recurse", "--steps", "2", "--truncation", "3", "--format", "csv"],
        &["solve", "decay", "--format", "csv"],
    ] {
        let (a, b) = (run(args), run(args));
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seed_precedence() {
    let cfg = tmp("seed.toml");
    std::fs::write(&cfg, "seed = 5\n").unwrap();
    let with_env = |args: &[&str]| -> Value {
        let o = bin().env("CONIC_MODULI_SEED", "9").args(args).output().unwrap();
        serde_json::from_slice(&o.stdout).unwrap()
    };
    let base = ["charts", "verify", "--samples", "10"];
    assert_eq!(json(&base)["seed"], 0);
    assert_eq!(with_env(&base)["seed"], 9);
    let c = cfg.to_str().unwrap();
    assert_eq!(with_env(&[&base[..], &["--config", c]].concat())["seed"], 5);
    assert_eq!(with_env(&[&base[..], &["--config", c, "--seed", "3"]].concat())["seed"], 3);
    assert_eq!(bin().env("CONIC_MODULI_SEED", "x").args(base).output().unwrap().status.code(), Some(2));
}

#[test]
fn config_values_sit_below_flags() {
    let cfg = tmp("faces.toml");
    std::fs::write(&cfg, "format = \"csv\"\n[faces]\nk = 4\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (_, rows) = csv_rows(&stdout(&run(&["faces", "--config", c])));
    assert_eq!(rows.len(), 26);
    let (_, rows) = csv_rows(&stdout(&run(&["faces", "--config", c, "--k", "3"])));
    assert_eq!(rows.len(), 4);
    assert!(run(&["faces", "--config", c, "--format", "json"]).stdout.starts_with(b"{"));
}

#[test]
fn config_rejects_unknown_keys() {
    let cfg = tmp("bad.toml");
    std::fs::write(&cfg, "[faces]\nkk = 4\n").unwrap();
    assert_eq!(run(&["faces", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn decay_family_round_trips_through_fit() {
    let fam = tmp("family.csv");
    let o = run(&["solve", "decay", "--order", "2", "--format", "csv", "--output", fam.to_str().unwrap()]);
    assert!(o.status.success());
    let direct = json(&["solve", "decay", "--order", "2"]);
    let fitted = json(&["fit", "--input", fam.to_str().unwrap(), "--N", "2"]);
    let (d, f) = (&direct["result"]["report"], &fitted["result"]["report"]);
    assert_eq!(f["passed"], true);
    assert_eq!(d["rhos"], f["rhos"]);
    assert_eq!(d["sups"], f["sups"]);
    for k in 0..2 {
        let (a, b) = (d["derivative_slopes"][k].as_f64().unwrap(), f["derivative_slopes"][k].as_f64().unwrap());
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn hyperbolic_dump_and_report() {
    let dump = tmp("field.csv");
    let v = json(&["solve", "hyperbolic", "--mesh", "48x8", "--dump", dump.to_str().unwrap()]);
    let rep = &v["result"]["report"];
    assert_eq!(rep["bound_holds"], true);
    assert!(rep["residual"].as_f64().unwrap() <= 1e-12);
    assert!(v["result"]["error_sup"].as_f64().unwrap() < 1e-2);
    let (header, rows) = csv_rows(&std::fs::read_to_string(&dump).unwrap());
    assert_eq!(header, "i,j,t,r,phi,value");
    assert_eq!(rows.len(), 48 * 8);
    assert_eq!(run(&["solve", "hyperbolic", "--rmax", "20"]).status.code(), Some(2));
}

#[test]
fn profile_fit_recovers_exponent() {
    let input = tmp("profile.csv");
    let mut text = String::from("# synthetic\nr,value\n");
    for n in 1..=30 {
        let r = 0.5f64.powi(n);
        text.push_str(&format!("{r},{}\n", 3.0 * r.powf(1.4) + r.powf(2.8)));
    }
    std::fs::write(&input, text).unwrap();
    let v = json(&["fit", "--input", input.to_str().unwrap(), "--terms", "2"]);
    let terms = v["result"]["report"]["terms"].as_array().unwrap();
    assert!((terms[0]["exponent"].as_f64().unwrap() - 1.4).abs() < 1e-6);
    assert!((terms[1]["exponent"].as_f64().unwrap() - 2.8).abs() < 1e-2);
}

#[test]
fn json_only_commands_refuse_csv() {
    assert_eq!(run(&["charts", "verify", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn csv_tables() {
    let (h, rows) = csv_rows(&stdout(&run(&["flat", "expand", "--order", "2", "--format", "csv"])));
    assert_eq!(h, "n,m,coefficient");
    assert_eq!(rows, ["1,1,1/10", "2,2,3/20"]);
    let (_, rows) = csv_rows(&stdout(&run(&["phg", "u0", "--order", "2", "--format", "csv"])));
    assert_eq!(rows, ["1,2,1/4,0.25", "2,4,1/32,0.03125"]);
    let (_, rows) = csv_rows(&stdout(&run(&["phg", "index", "--beta", "1/2", "--cutoff", "1", "--format", "csv"])));
    assert_eq!(rows, ["1,1,0,2", "1,0,1,2"]);
}
