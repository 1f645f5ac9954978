use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use projlstd_cli::output::{schema_columns, SCHEMA_JSON, SCHEMA_VERSION};
use projlstd_cli::{run, Command, RunOptions};
use tempfile::TempDir;

const SMALL: &str = r#"{
    "chain": {"kind": "ring", "n_states": 12, "params": {"stay": 0.2}, "gamma": 0.8, "reward_kind": "cosine"},
    "features": {"kind": "random_bounded", "D": 6, "seed": 4},
    "projection": {"d": 3, "seed": 1},
    "grid": {"lambdas": [0.0, 0.6, 1.0], "ns": [400, 800], "ds": [2, 3]},
    "seeds": [0, 1, 2],
    "master_seed": 99,
    "bench": {"repeats": 1, "warmup": 0},
    "verify": {
        "suites": ["jl", "contraction", "mixing"],
        "jl": {"cases": [{"d": 16, "eps": 0.5}], "D": 32, "vectors": 200, "draws": 5},
        "pairs": 50,
        "mixing_runs": 50
    }
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_lib(command: Command, config: &Path, out: &Path, jobs: usize) -> Vec<PathBuf> {
    run(&RunOptions {
        command,
        config: config.to_path_buf(),
        out: Some(out.to_path_buf()),
        seed: None,
        jobs,
    })
    .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<BTreeMap<String, String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            header.iter().cloned().zip(rec.iter().map(str::to_owned)).collect()
        })
        .collect();
    (header, rows)
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn binary() -> Process {
    let mut p = Process::new(env!("CARGO_BIN_EXE_projlstd"));
    p.env_remove("PROJLSTD_JOBS");
    p
}

#[test]
fn every_table_matches_the_shipped_schema() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let mut seen = Vec::new();
    for command in [Command::Solve, Command::Estimate, Command::Sweep, Command::Bench, Command::Verify] {
        let out = tmp.path().join(command.as_str());
        for path in run_lib(command, &cfg, &out, 2) {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            if name.ends_with(".json") {
                let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
                assert_eq!(sidecar["schema_version"], SCHEMA_VERSION);
                assert_eq!(sidecar["command"], command.as_str());
                assert_eq!(sidecar["config"]["master_seed"], 99);
                assert!(sidecar["files"].as_array().unwrap().len() >= 1);
                continue;
            }
            let (header, rows) = read_csv(&path);
            let documented = schema_columns(&name).unwrap_or_else(|| panic!("{name} missing from schema"));
            assert_eq!(header, documented, "{name}");
            assert!(!rows.is_empty(), "{name} is empty");
            assert!(rows.iter().all(|r| r["schema_version"] == SCHEMA_VERSION), "{name}");
            seen.push(name);
        }
    }
    let schema: serde_json::Value = serde_json::from_str(SCHEMA_JSON).unwrap();
    assert_eq!(schema["schema_version"], SCHEMA_VERSION);
    let mut documented: Vec<String> = schema["files"].as_object().unwrap().keys().cloned().collect();
    documented.sort();
    seen.sort();
    assert_eq!(seen, documented);
    for file in schema["files"].as_object().unwrap().values() {
        for col in file["columns"].as_array().unwrap() {
            assert!(!col["description"].as_str().unwrap().is_empty());
            assert!(!col["type"].as_str().unwrap().is_empty());
        }
    }
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    for command in [Command::Estimate, Command::Sweep, Command::Verify, Command::Solve] {
        let a = tmp.path().join(format!("{}_1", command.as_str()));
        let b = tmp.path().join(format!("{}_4", command.as_str()));
        let pa = run_lib(command, &cfg, &a, 1);
        run_lib(command, &cfg, &b, 4);
        for p in pa {
            let name = p.file_name().unwrap();
            if name.to_string_lossy().contains("timings") {
                continue;
            }
            assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name:?}");
        }
    }
}

#[test]
fn estimate_rows_are_consistent() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("est");
    run_lib(Command::Estimate, &cfg, &out, 2);
    let (_, rows) = read_csv(&out.join("estimate.csv"));
    // 2 n × 2 d × 3 λ × 3 seeds cells, three estimators each.
    assert_eq!(rows.len(), 2 * 2 * 3 * 3 * 3);
    for r in &rows {
        assert_eq!(r["error"], "", "{r:?}");
        assert_eq!(r["triangle_ok"], "true");
        let (e, a, t) = (num(r, "estimation_error"), num(r, "approximation_error"), num(r, "total_error"));
        assert!(t <= e + a + 1e-9);
        match r["estimator"].as_str() {
            "lstd_lambda" => {
                assert_eq!(r["d"], "6");
                assert_eq!(r["projection_seed"], "");
                assert_eq!(r["estimation_bound"], "");
            }
            "lstd_rp" => assert_eq!(r["lambda"], "0.0"),
            _ => {
                // D = 6 leaves the projected Gram factor undefined, so only the
                // approximation bound has a value.
                assert!(!r["approximation_bound"].is_empty());
                assert_eq!(r["total_bound"], "");
                assert_eq!(r["bound_hypotheses_hold"], "false");
            }
        }
    }
    // With λ = 0 the traced projected estimator and the untraced one coincide.
    let cells: Vec<&BTreeMap<String, String>> = rows.iter().filter(|r| r["lambda"] == "0.0").collect();
    for rp in cells.iter().filter(|r| r["estimator"] == "lstd_lambda_rp") {
        let twin = cells
            .iter()
            .find(|r| r["estimator"] == "lstd_rp" && r["cell"] == rp["cell"])
            .unwrap();
        for col in ["estimation_error", "approximation_error", "total_error", "projection_seed", "trajectory_seed"] {
            assert_eq!(rp[col], twin[col], "{col}");
        }
    }
    let (_, timings) = read_csv(&out.join("estimate_timings.csv"));
    assert_eq!(timings.len(), rows.len());
}

#[test]
fn single_cell_sweep_equals_estimate() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL
        .replace("\"lambdas\": [0.0, 0.6, 1.0], \"ns\": [400, 800], \"ds\": [2, 3]", "\"lambdas\": [0.6], \"ns\": [500]")
        .replace("\"seeds\": [0, 1, 2]", "\"seeds\": [5]");
    let cfg = write_config(tmp.path(), "c.json", &text);
    run_lib(Command::Estimate, &cfg, &tmp.path().join("e"), 1);
    run_lib(Command::Sweep, &cfg, &tmp.path().join("s"), 1);
    let e = std::fs::read(tmp.path().join("e/estimate.csv")).unwrap();
    let s = std::fs::read(tmp.path().join("s/sweep.csv")).unwrap();
    assert_eq!(e, s);
    assert_eq!(e.iter().filter(|&&b| b == b'\n').count(), 1 + 3);
}

#[test]
fn lambda_one_fixed_point_is_the_projection_of_the_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    run_lib(Command::Solve, &cfg, &tmp.path().join("solve"), 1);
    run_lib(Command::Sweep, &cfg, &tmp.path().join("sweep"), 2);
    let (_, solve) = read_csv(&tmp.path().join("solve/solve_summary.csv"));
    let (_, sweep) = read_csv(&tmp.path().join("sweep/sweep.csv"));
    for s in solve.iter().filter(|r| r["lambda"] == "1.0") {
        let g = num(s, "approx_error_g");
        assert!((num(s, "fixed_point_error") - g).abs() <= 1e-9 * g.max(1.0));
        // The first seed's λ = 1 sweep rows use the same projection.
        for r in sweep.iter().filter(|r| {
            r["estimator"] == "lstd_lambda_rp" && r["lambda"] == "1.0" && r["seed"] == "0" && r["d"] == s["d"]
        }) {
            assert!((num(r, "approximation_error") - g).abs() <= 1e-9 * g.max(1.0));
        }
    }
    for s in &solve {
        assert!(num(s, "fixed_point_residual") <= 1e-8);
        assert!(num(s, "fixed_point_error") <= num(s, "approximation_inequality_rhs") + 1e-9);
    }
}

#[test]
fn one_hot_features_represent_the_value_exactly() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL.replace("\"kind\": \"random_bounded\", \"D\": 6", "\"kind\": \"one_hot\", \"D\": 12");
    let cfg = write_config(tmp.path(), "c.json", &text);
    run_lib(Command::Solve, &cfg, tmp.path(), 1);
    let (_, rows) = read_csv(&tmp.path().join("solve_summary.csv"));
    for r in rows {
        assert!(num(&r, "approx_error_f") < 1e-12);
    }
    let (_, states) = read_csv(&tmp.path().join("solve_states.csv"));
    for s in states {
        assert!((num(&s, "value") - num(&s, "projected_value_f")).abs() < 1e-9);
    }
}

#[test]
fn sweep_summary_reports_minimizers() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    run_lib(Command::Sweep, &cfg, tmp.path(), 2);
    let (_, summary) = read_csv(&tmp.path().join("sweep_summary.csv"));
    // Per n: one λ scan per d and one d scan per λ.
    assert_eq!(summary.len(), 2 * (2 + 3));
    for r in summary.iter().filter(|r| r["scan"] == "lambda") {
        assert!(num(r, "empirical_min_mean_total_error") <= num(r, "lambda0_mean_total_error"));
        assert_eq!(num(r, "runs_used"), 9.0);
    }
    let (_, bounds) = read_csv(&tmp.path().join("sweep_bounds.csv"));
    assert_eq!(bounds.len(), 2 * 2 * 3);
    assert!(bounds.iter().all(|b| b["h_term_omitted"] == "true"));
}

#[test]
fn seed_flag_overrides_the_master_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let status = binary()
        .args(["estimate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("a"))
        .args(["--seed", "123", "--jobs", "2"])
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/estimate.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["master_seed"], 123);
    run_lib(Command::Estimate, &cfg, &tmp.path().join("b"), 2);
    assert_ne!(
        std::fs::read(tmp.path().join("a/estimate.csv")).unwrap(),
        std::fs::read(tmp.path().join("b/estimate.csv")).unwrap()
    );
}

#[test]
fn output_field_is_used_without_out_flag() {
    let tmp = TempDir::new().unwrap();
    let dest = tmp.path().join("from_config");
    let text = SMALL.replacen('{', &format!("{{\"output\": {:?},", dest.to_str().unwrap()), 1);
    let cfg = write_config(tmp.path(), "c.json", &text);
    let status = binary().args(["solve", "--config"]).arg(&cfg).output().unwrap().status;
    assert!(status.success());
    assert!(dest.join("solve_summary.csv").exists());
}

fn exit_code(args: &[&str], config: &Path, envs: &[(&str, &str)], out: &Path) -> i32 {
    let mut p = binary();
    p.arg(args[0]).arg("--config").arg(config).arg("--out").arg(out).args(&args[1..]);
    for (k, v) in envs {
        p.env(k, v);
    }
    p.output().unwrap().status.code().unwrap()
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let good = write_config(tmp.path(), "good.json", SMALL);
    let not_json = write_config(tmp.path(), "bad.json", "{ not json");
    let invalid = write_config(tmp.path(), "invalid.json", &SMALL.replace("\"gamma\": 0.8", "\"gamma\": 1.2"));
    let periodic = write_config(tmp.path(), "periodic.json", &SMALL.replace("\"stay\": 0.2", "\"stay\": 0.0"));
    let missing = tmp.path().join("missing.json");

    assert_eq!(exit_code(&["solve"], &good, &[], &out), 0);
    assert_eq!(exit_code(&["solve"], &not_json, &[], &out), 1);
    assert_eq!(exit_code(&["solve"], &invalid, &[], &out), 1);
    assert_eq!(exit_code(&["solve"], &periodic, &[], &out), 1);
    assert_eq!(exit_code(&["solve"], &missing, &[], &out), 1);
    assert_eq!(exit_code(&["solve", "--jobs", "0"], &good, &[], &out), 1);
    assert_eq!(exit_code(&["solve"], &good, &[("PROJLSTD_JOBS", "lots")], &out), 1);
    assert_eq!(exit_code(&["solve"], &good, &[("PROJLSTD_JOBS", "2")], &out), 0);
    assert_eq!(exit_code(&["frobnicate"], &good, &[], &out), 1);

    // The bound certification cannot even be evaluated for D this small.
    let cert = write_config(
        tmp.path(),
        "cert.json",
        &SMALL.replace("\"suites\": [\"jl\", \"contraction\", \"mixing\"]", "\"suites\": [\"bounds_cert\"]"),
    );
    assert_eq!(exit_code(&["verify"], &cert, &[], &out), 2);
    let (_, rows) = read_csv(&out.join("verify.csv"));
    assert!(rows.iter().any(|r| r["pass"] == "false"));
    assert_eq!(exit_code(&["verify"], &good, &[], &out), 0);

    // An output path below a regular file cannot be created.
    let blocker = write_config(tmp.path(), "blocker", "");
    assert_eq!(exit_code(&["solve"], &good, &[], &blocker.join("sub")), 3);
}
