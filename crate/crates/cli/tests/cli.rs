use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use longwave::spectral::SpectralField;

fn longwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longwave"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{"epsilons": [0.2, 0.141, 0.1], "tau0": 0.05, "bo": {"n": 256}, "checkpoints": 4}"#;

#[test]
fn constants_prints_json() {
    let o = longwave(&["constants", "--alpha", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["c"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert!((v["kappa3"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-8);
    for key in ["zeta_a", "zeta_a1", "kappa1", "kappa2", "eta", "gamma", "beta"] {
        assert!(v[key].is_f64(), "missing {}", key);
    }
}

#[test]
fn alpha_star_in_bracket() {
    let o = longwave(&["alpha-star", "--tol", "1e-10"]);
    assert_eq!(o.status.code(), Some(0));
    let a: f64 = stdout(&o).trim().parse().unwrap();
    assert!(a > 1.45 && a < 1.5, "{}", a);
}

#[test]
fn eta_rates_rows() {
    let o = longwave(&["eta-rates", "--alpha", "2", "--h-list", "0.4,0.2,0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,eta_h,abs_err"));
    let errs: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    // linear rate at α = 2
    assert!((errs[0] / errs[1] - 2.0).abs() < 0.05 && (errs[1] / errs[2] - 2.0).abs() < 0.05, "{:?}", errs);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rates.csv");
    let o = longwave(&["eta-rates", "--alpha", "2.5", "--out", path_str(&file)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&file).unwrap().lines().count(), 6);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn usage_and_domain_errors_exit_one() {
    let o = longwave(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = longwave(&[]);
    assert_eq!(o.status.code(), Some(1));
    let o = longwave(&["constants", "--alpha", "3.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha"));
    let o = longwave(&["validate", "--epsilons", "0.1,0.2", "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("descending"));
    let o = longwave(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn dry_run_prints_plan_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"alpha": 1.8, "tau0": 0.1}"#).unwrap();
    let o = longwave(&["validate", "--config", path_str(&cfg), "--alpha", "2.5", "--out", path_str(&out), "--dry-run"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    // the flag wins over the file
    assert!(text.starts_with("alpha = 2.5, tau0 = 0.1"), "{}", text);
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][2], "512");
    assert_eq!(rows[2][2], "1024");
    assert!(rows.iter().all(|r| r[3].parse::<usize>().unwrap() > 0 && r[5].parse::<u64>().unwrap() > 0));
    assert!(!out.exists());
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"alpah": 2.0}"#).unwrap();
    let o = longwave(&["residual-sweep", "--config", path_str(&cfg), "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpah"));
    let o = longwave(&["validate", "--config", path_str(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_bo_writes_trace_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bo").join("trace.csv");
    let o = longwave(&[
        "solve-bo", "--n", "128", "--tau-end", "0.02", "--checkpoints", "2", "--out", path_str(&trace),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,mean,l2,h6");
    assert_eq!(lines.len(), 4);
    let l2: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(l2.iter().all(|v| (v - l2[0]).abs() < 1e-10));
    let dump = dir.path().join("bo").join("trace_u0002.bin");
    let u = SpectralField::<f64>::read_binary(fs::File::open(dump).unwrap()).unwrap();
    assert_eq!(u.grid().n(), 128);
    assert!((u.l2_norm() - l2[2]).abs() < 1e-12);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bo").join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve-bo");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_lattice_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let n = 32;
    let init = dir.path().join("init.csv");
    let mut text = String::from("j,r,p\n");
    for j in 0..n {
        let r = 0.01 * (j as f64 * 2.0 * std::f64::consts::PI / n as f64).sin();
        text.push_str(&format!("{},{},{}\n", j, r, -0.5 * r));
    }
    fs::write(&init, text).unwrap();
    let traj = dir.path().join("traj.csv");
    let args = [
        "simulate-lattice", "--n", "32", "--cutoff", "8", "--steps", "40", "--every", "20", "--init",
        path_str(&init), "--out", path_str(&traj),
    ];
    let o = longwave(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let body = fs::read_to_string(&traj).unwrap();
    let mut rows = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(rows.headers().unwrap(), vec!["t", "j", "r", "p"]);
    let recs: Vec<(f64, usize, f64, f64)> = rows.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 3 * n);
    let times: Vec<f64> = recs.iter().step_by(n).map(|r| r.0).collect();
    assert_eq!(times, vec![0.0, 1.0, 2.0]);
    let momentum = |k: usize| recs[k * n..(k + 1) * n].iter().map(|r| r.3).sum::<f64>();
    assert!((momentum(2) - momentum(0)).abs() < 1e-12);

    // rerun is byte-identical; one manifest per directory
    let first = body.clone();
    assert_eq!(longwave(&args).status.code(), Some(0));
    assert_eq!(fs::read_to_string(&traj).unwrap(), first);
    let manifests = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count();
    assert_eq!(manifests, 1);

    let short = dir.path().join("short.csv");
    fs::write(&short, "r,p\n0,0\n").unwrap();
    let o = longwave(&["simulate-lattice", "--n", "32", "--cutoff", "8", "--init", path_str(&short), "--dry-run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn collision_exits_two_with_time() {
    let dir = tempfile::tempdir().unwrap();
    let init = dir.path().join("init.csv");
    let mut text = String::from("r,p\n0.9,3\n");
    for _ in 1..32 {
        text.push_str("-0.99,0\n");
    }
    fs::write(&init, text).unwrap();
    let o = longwave(&[
        "simulate-lattice", "--n", "32", "--cutoff", "4", "--steps", "100", "--init", path_str(&init), "--out",
        path_str(&dir.path().join("t.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("alpha = 2") && err.contains("t = "), "{}", err);
}

#[test]
fn validate_blow_up_names_alpha_epsilon_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"profile": {"amplitude": 40}, "epsilons": [0.2, 0.141, 0.1], "tau0": 0.05, "bo": {"n": 256}, "checkpoints": 4}"#).unwrap();
    let out = dir.path().join("v");
    let o = longwave(&["validate", "--config", path_str(&cfg), "--out", path_str(&out), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("alpha = 2") && err.contains("epsilon = 0.2") && err.contains("t = "), "{}", err);
    // partial outputs and the manifest are still written
    assert!(out.join("report.json").exists() && out.join("manifest.json").exists());
}

#[test]
fn sweeps_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, SMALL).unwrap();
    let run = |name: &str, cmd: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = longwave(&[cmd, "--config", path_str(&cfg), "--out", path_str(&out), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = run("a", "residual-sweep", "1");
    let b = run("b", "residual-sweep", "3");
    let csv_a = fs::read(a.join("residual_sweep.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("residual_sweep.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&csv_a).lines().count(), 1 + 3 * 5);

    let manifest = |dir: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
    };
    let (ma, mb) = (manifest(&a), manifest(&b));
    // the output directory is part of the config, so the hashes differ here
    assert_ne!(ma["config_hash"], mb["config_hash"]);
    let again = run("a", "residual-sweep", "2");
    assert_eq!(manifest(&again)["config_hash"], ma["config_hash"]);
    assert_eq!(fs::read(again.join("residual_sweep.csv")).unwrap(), csv_a);

    let v1 = run("v1", "validate", "1");
    let v2 = run("v2", "validate", "2");
    for name in ["validation.csv", "error_energy.csv"] {
        assert_eq!(fs::read(v1.join(name)).unwrap(), fs::read(v2.join(name)).unwrap(), "{}", name);
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(v1.join("report.json")).unwrap()).unwrap();
    assert!(report["mu"]["slope"].is_f64());
}
