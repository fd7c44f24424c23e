use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epicampaign::config::{load_scenario, ScenarioFile};
use serde_json::Value;
use tempfile::TempDir;

const ER: &str = r#"{
    "network": {"type": "poisson", "lambda": 33.45, "k_min": 13, "k_max": 54},
    "T": 1,
    "beta": {"type": "constant", "value": 0.07},
    "cost": {"b": 25},
    "seed": {"mode": "uniform", "i0": 0.01}
}"#;

const SMALL: &str = r#"{
    "network": {"type": "poisson", "lambda": 6, "k_min": 2, "k_max": 12},
    "T": 1,
    "n_grid": 101,
    "beta": {"type": "constant", "value": 0.2},
    "cost": {"b": 10},
    "seed": {"mode": "uniform", "i0": 0.02}
}"#;

fn write_scenario(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn epicampaign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epicampaign")).args(args).output().unwrap()
}

fn run_ok(cmd: &str, scenario: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = epicampaign(&args);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (head, rows)
}

#[test]
fn scenario_file_round_trips() {
    let dir = TempDir::new().unwrap();
    let json = ER.replace("\"T\": 1,", "\"T\": 1, \"variant\": {\"type\": \"fixed_budget\", \"B\": 0.1},");
    let first = load_scenario(&write_scenario(dir.path(), "a.json", &json)).unwrap();
    let text = serde_json::to_string_pretty(&first.file).unwrap();
    let second = load_scenario(&write_scenario(dir.path(), "b.json", &text)).unwrap();
    assert_eq!(first.scenario, second.scenario);
    let reparsed: ScenarioFile = serde_json::from_str(&text).unwrap();
    assert_eq!(reparsed, first.file);
}

#[test]
fn no_dynamics_reward_is_seed_mass() {
    let dir = TempDir::new().unwrap();
    let json = ER
        .replace("\"value\": 0.07}", "\"value\": 0.0}, \"gamma\": {\"type\": \"constant\", \"value\": 0.0}");
    let scn = write_scenario(dir.path(), "s.json", &json);
    let out = dir.path().join("out");
    run_ok("solve", &scn, &out, &[]);
    let summary = read_json(&out.join("summary.json"));
    let (_, dist) = read_csv(&out.join("distribution.csv"));
    let mass: f64 = dist.iter().map(|r| r[1] * 0.01).sum();
    let j = summary["J"].as_f64().unwrap();
    assert!((j - mass).abs() < 1e-12, "J {j} vs {mass}");
    assert_eq!(summary["control_cost"].as_f64().unwrap(), 0.0);
}

#[test]
fn every_output_has_provenance() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), "s.json", SMALL);
    let out = dir.path().join("out");
    run_ok("solve", &scn, &out, &["--seed", "4"]);
    let mut data = 0;
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name.ends_with(".provenance.json") {
            continue;
        }
        data += 1;
        let p = read_json(&out.join(format!("{name}.provenance.json")));
        assert_eq!(p["file"], name.as_str());
        assert_eq!(p["subcommand"], "solve");
        assert_eq!(p["rng_seed"], 4);
        assert_eq!(p["scenario_sha256"].as_str().unwrap().len(), 64);
        assert!(p["versions"]["epicampaign_core"].is_string());
    }
    assert!(data >= 7);
    let (head, _) = read_csv(&out.join("states.csv"));
    assert_eq!(head[0], "t");
    assert_eq!(head[1], "i_2");
    let (head, _) = read_csv(&out.join("resource.csv"));
    assert_eq!(head, ["k", "r_norm_k"]);
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), "s.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok("simulate", &scn, out, &["--seed", "9", "--nodes", "2000", "--runs", "8", "--controls", "optimal"]);
        run_ok("solve-joint", &scn, out, &["--seed", "9"]);
    }
    for name in ["simulation.csv", "runs.csv", "states.csv", "seed.csv", "controls.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let c = dir.path().join("c");
    run_ok("simulate", &scn, &c, &["--seed", "10", "--nodes", "2000", "--runs", "8", "--controls", "optimal"]);
    assert_ne!(fs::read(a.join("runs.csv")).unwrap(), fs::read(c.join("runs.csv")).unwrap());
}

#[test]
fn sweep_over_cost_weight_is_non_increasing() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), "er.json", ER);
    let out = dir.path().join("out");
    run_ok("sweep", &scn, &out, &["--sweep-param", "b", "--sweep-values", "5,25,100"]);
    let (head, rows) = read_csv(&out.join("sweep_b.csv"));
    assert_eq!(&head[..6], ["b", "optimal", "joint", "static", "two_stage", "uncontrolled"]);
    assert_eq!(rows.len(), 3);
    for col in 1..=5 {
        for w in rows.windows(2) {
            assert!(w[1][col] <= w[0][col] + 1e-12, "{} rises: {} -> {}", head[col], w[0][col], w[1][col]);
        }
    }
    for r in &rows {
        assert!(r[1] >= r[3] - 1e-8 && r[1] >= r[4] - 1e-8 && r[2] >= r[1] - 1e-8);
        assert!(r[6] >= -1e-6 && r[7] >= -1e-6);
    }
    assert!(out.join("sweep_b_25.json").exists());
}

#[test]
fn validation_gap_is_within_tolerance() {
    let dir = TempDir::new().unwrap();
    let scn = write_scenario(dir.path(), "er.json", ER);
    let out = dir.path().join("out");
    run_ok("validate", &scn, &out, &["--seed", "7", "--nodes", "10000", "--runs", "20"]);
    let s = read_json(&out.join("summary.json"));
    let gap = s["terminal_gap"].as_f64().unwrap();
    let tol = s["tolerance"].as_f64().unwrap();
    assert!(gap < tol, "gap {gap} tolerance {tol}");
    assert_eq!(s["within_tolerance"], true);
    let (head, rows) = read_csv(&out.join("validation.csv"));
    assert_eq!(head, ["t", "model_i", "mean_i", "std_i"]);
    assert_eq!(rows.len(), 201);
}

#[test]
fn budget_heuristic_and_check_outputs() {
    let dir = TempDir::new().unwrap();
    let json = SMALL.replace("\"T\": 1,", "\"T\": 1, \"variant\": {\"type\": \"fixed_budget\", \"B\": 0.05},");
    let scn = write_scenario(dir.path(), "s.json", &json);
    let out = dir.path().join("out");
    run_ok("solve-budget", &scn, &out, &[]);
    let s = read_json(&out.join("summary.json"));
    assert!(s["gap"].as_f64().unwrap() < 1e-6);
    let j_opt = s["J"].as_f64().unwrap();

    run_ok("heuristic", &scn, &out, &[]);
    let h = read_json(&out.join("summary.json"));
    for entry in h.as_array().unwrap() {
        assert!((entry["resource_used"].as_f64().unwrap() - 0.05).abs() < 1e-9);
        assert!(entry["J"].as_f64().unwrap() <= j_opt + 1e-8);
    }

    run_ok("check", &scn, &out, &[]);
    let c = read_json(&out.join("check.json"));
    assert_eq!(c["adjoints_nonnegative"], true);
    assert_eq!(c["controls_non_increasing"], "holds");
}

#[test]
fn failures_exit_with_one_line_per_class() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let check = |json: &str, cmd: &str, code: i32, class: &str| {
        let scn = write_scenario(dir.path(), "bad.json", json);
        let o = epicampaign(&[cmd, "--scenario", scn.to_str().unwrap(), "--out", out]);
        assert_eq!(o.status.code(), Some(code), "{}", String::from_utf8_lossy(&o.stderr));
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.contains(&format!("{class} error")), "{err}");
    };
    check(&SMALL.replace("\"i0\": 0.02", "\"i0\": 1.2"), "solve", 2, "config");
    check(&SMALL.replace("\"b\": 10", "\"weight\": 10"), "solve", 2, "config");
    check(&SMALL, "solve-budget", 2, "config");
    let tiny = SMALL.replace("\"T\": 1,", "\"T\": 1, \"variant\": {\"type\": \"fixed_budget\", \"B\": 1e-12},");
    check(&tiny, "solve-budget", 3, "bracket");
    let fast = SMALL.replace("\"value\": 0.2", "\"value\": 500").replace("\"n_grid\": 101", "\"n_grid\": 3");
    check(&fast, "simulate", 4, "blowup");
}

#[test]
fn bundled_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
