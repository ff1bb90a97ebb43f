use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tracelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracelab"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tracelab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_all_passes() {
    let out = tracelab(&["verify", "--suite", "all", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 6);
    for r in &recs {
        assert!(r["outputs"]["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    }
}

#[test]
fn hardpair_brute_matches_library() {
    let out = tracelab(&["hardpair", "--L", "27", "--k", "3", "--p", "0.5", "--mode", "brute"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    let family = tracelab::hard_pairs::build_family(27).unwrap();
    let arc = tracelab::poly::ArcSpec::for_block_length(27, 4097).unwrap();
    let prm = tracelab::ChannelParams::new(0.5).unwrap();
    let pair = tracelab::hard_pairs::brute_force_closest_pair(&family, 3, prm, arc).unwrap();
    let got = &recs[0]["outputs"]["closest_pair"];
    assert_eq!(got["i"], pair.i);
    assert_eq!(got["j"], pair.j);
    assert_eq!(got["x"], pair.x.to_string());
    assert_eq!(got["sup"].as_f64().unwrap(), pair.sup);
    assert_eq!(recs[0]["command"], "hardpair");
    assert_eq!(recs[0]["params"]["L"], 27);
    assert!(recs[0]["seed"].is_null());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = tracelab(&["simulate", "--x", "01", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--bogus"));
    assert!(err.contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(tracelab(&["reconstruct"]).status.code(), Some(2));
}

#[test]
fn stochastic_commands_require_a_seed() {
    let out = tracelab(&["simulate", "--x", "0110", "--p", "0.5", "--T", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    let out = tracelab(&["distinguish", "--x", "0110", "--p", "0.5", "--T", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_values_name_the_flag() {
    let out = tracelab(&["density-map", "--x", "0120", "--k", "2", "--p", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--x"));
    let out = tracelab(&["density-map", "--x", "0110", "--k", "2", "--p", "1.5"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));
    let out = tracelab(&["hardpair", "--L", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--L"));
    let out = tracelab(&["mle", "--mode", "magic", "--n", "4"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--mode"));
}

#[test]
fn replay_is_byte_identical() {
    let args = ["distinguish", "--x", "0110100111", "--p", "0.3", "--T", "20", "--trials", "60", "--mode", "kgram", "--k", "2", "--seed", "5"];
    let a = tracelab(&args);
    let b = tracelab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let rec = &records(&a)[0];
    assert_eq!(rec["seed"], 5);
    assert_eq!(rec["timestamp"], "2023-11-14T22:13:20Z");
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("sim.cfg");
    std::fs::write(&cfg, "# simulation\nx = 0110\np=0.5\nT=4\nseed=9\n").unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = records(&tracelab(&["simulate", "--config", path]));
    assert_eq!(from_file[0]["params"]["p"], 0.5);
    let overridden = records(&tracelab(&["simulate", "--config", path, "--p", "0.3"]));
    assert_eq!(overridden[0]["params"]["p"], 0.3);
    assert_eq!(overridden[0]["params"]["T"], 4);

    let empty = scratch("empty.cfg");
    std::fs::write(&empty, "").unwrap();
    let out = tracelab(&["hardpair", "--config", empty.to_str().unwrap(), "--L", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(records(&out)[0]["params"]["p"], Value::Null);
}

#[test]
fn malformed_config_reports_line() {
    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "x=0110\np==\n").unwrap();
    let out = tracelab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.cfg:2"));
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let out = tracelab(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn out_path_and_csv_report() {
    let out_path = scratch("decay.jsonl");
    let csv_path = scratch("decay.csv");
    let out = tracelab(&[
        "report",
        "--mode",
        "decay",
        "--L",
        "27",
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(lines.lines().count(), 2);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut rows = csv.lines();
    assert!(rows.next().unwrap().starts_with("L,k,family_size"));
    let sups: Vec<f64> = rows.map(|r| r.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(sups.len(), 2);
    assert!(sups[1] < sups[0]);
}

#[test]
fn lower_bound_mode_is_exact() {
    let out = tracelab(&["mle", "--mode", "lb", "--n", "8", "--T", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &records(&out)[0]["outputs"];
    assert_eq!(r["pr_mle_zero"], 0.0);
    assert_eq!(r["pass"], true);
}

#[test]
fn remaining_commands_run() {
    for args in [
        vec!["density-map", "--n", "12", "--k", "2", "--p", "0.3", "--seed", "3"],
        vec!["genpoly", "--x", "000100100", "--y", "001000100", "--k", "2", "--p", "0.5"],
        vec!["hardpair", "--L", "8", "--mode", "sample", "--trials", "50", "--seed", "2"],
        vec!["hardpair", "--L", "27", "--mode", "pigeonhole"],
        vec!["hardpair", "--L", "8", "--mode", "properties", "--seed", "2"],
        vec!["mle", "--n", "6", "--p", "0.2", "--T", "4", "--trials", "40", "--seed", "1"],
        vec!["mle", "--mode", "optimality", "--n", "3", "--T", "2", "--p", "0.3", "--seed", "1"],
        vec!["mle", "--mode", "map", "--n", "3", "--p", "0.3", "--trials", "50", "--seed", "1"],
        vec!["report", "--mode", "distinctness", "--n", "6"],
        vec!["report", "--mode", "curve", "--n", "5", "--T", "8", "--trials", "30", "--seed", "4"],
    ] {
        let out = tracelab(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!records(&out).is_empty(), "{args:?}");
    }
}

#[test]
fn distinguish_sweep_csv_columns() {
    let csv_path = scratch("sweep.csv");
    let out = tracelab(&[
        "report", "--mode", "distinguish", "--x", "0101", "--y", "1010", "--p", "0.5", "--T", "8", "--trials", "40", "--seed", "3",
        "--csv", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,n,p,T,rate,ci_low,ci_high,seed");
    assert_eq!(lines.count(), 8);
    assert_eq!(records(&out).len(), 8);
}
