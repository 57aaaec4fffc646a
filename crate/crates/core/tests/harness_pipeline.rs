use longwave::bo::{gaussian_profile, BOConfig, BOState};
use longwave::harness::*;
use longwave::lattice::{Lattice, LatticeConfig};
use longwave::spectral::{PeriodicGrid, SpectralField};
use longwave::AlphaParams64;

fn small_config(alpha: f64) -> ValidationConfig {
    let mut cfg = ValidationConfig::default();
    cfg.alpha = alpha;
    cfg.epsilons = vec![0.2, 0.141, 0.1];
    cfg.tau0 = 0.1;
    cfg.checkpoints = 6;
    cfg.bo.n = 512;
    cfg
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn leading_order_cancels() {
    // tiny amplitude keeps the force linear
    let alpha: f64 = 2.0;
    let eps: f64 = 0.05;
    let p = AlphaParams64::new(alpha, 1e-12).unwrap();
    let grid = PeriodicGrid::new(102.4, 1024).unwrap();
    let u = gaussian_profile(&grid, 1e-4, 102.4 / 20.0);
    let n = 2048;
    let lat = Lattice::new(LatticeConfig::new(n, alpha, 200, 0.05)).unwrap();
    let sample = |f: &SpectralField<f64>, scale: f64| -> Vec<f64> {
        f.sample_shifted(0.0, n).iter().map(|v| scale * v).collect()
    };
    let rt = sample(&u.average_op(eps).unwrap(), -eps.powf(alpha - 1.0));
    let force = lat.force(&rt).unwrap();
    let adv = sample(&u.derivative(), -eps.powf(alpha) * p.c * p.c);
    let disp = sample(&u.hilbert_frac(alpha), -eps.powf(2.0 * alpha - 1.0) * p.kappa3);
    let plain: Vec<f64> = adv.iter().zip(&force).map(|(a, f)| a - f).collect();
    let rel = l2(&plain) / l2(&adv);
    // what is left is the dispersive correction, one power ε^{α-1} down
    let predicted = l2(&disp) / l2(&adv);
    assert!((rel - predicted).abs() < 0.1 * predicted, "{} vs {}", rel, predicted);
    let corrected: Vec<f64> = plain.iter().zip(&disp).map(|(a, d)| a + d).collect();
    assert!(l2(&corrected) / l2(&adv) < 1e-3, "{}", l2(&corrected) / l2(&adv));
}

#[test]
fn zero_profile_has_zero_residual() {
    let cfg = small_config(2.0);
    let params = cfg.params().unwrap();
    let bo = cfg.bo_config(&params).unwrap();
    let plan = &cfg.plan().unwrap()[0];
    let lat = Lattice::new(cfg.lattice_config(plan)).unwrap();
    let zero = BOState::new(SpectralField::zeros(&cfg.grid().unwrap()), 0.0);
    let s = residual_eval(&zero, &bo, plan.epsilon, 3.0, &lat).unwrap();
    assert_eq!(s.l2_norm, 0.0);
}

#[test]
fn residual_routes_agree() {
    for &alpha in &[1.8, 2.0, 2.5] {
        let mut cfg = small_config(alpha);
        cfg.profile.amplitude = 1.0;
        let params = cfg.params().unwrap();
        let bo = cfg.bo_config(&params).unwrap();
        let plan = &cfg.plan().unwrap()[1];
        let lat = Lattice::new(cfg.lattice_config(plan)).unwrap();
        let ev = ResidualEvaluator::new(&lat, &bo, plan.epsilon).unwrap();
        let state = BOState::new(cfg.initial_profile().unwrap(), 0.0);
        let t = 7.3;
        let a = ev.eval(&state, t, true).unwrap();
        let b = ev.eval_via_lattice(&state, t).unwrap();
        let diff: Vec<f64> = a.values.unwrap().iter().zip(b.values.as_ref().unwrap()).map(|(x, y)| x - y).collect();
        assert!(l2(&diff) <= 1e-9 * a.l2_norm, "alpha {}: {} vs {}", alpha, l2(&diff), a.l2_norm);
    }
}

#[test]
fn residual_follows_moving_frame() {
    // a pure translation of the profile by cT is undone by the frame shift
    let alpha = 2.0;
    let cfg = small_config(alpha);
    let params = cfg.params().unwrap();
    let bo: BOConfig<f64> = cfg.bo_config(&params).unwrap();
    let plan = &cfg.plan().unwrap()[0];
    let lat = Lattice::new(cfg.lattice_config(plan)).unwrap();
    let ev = ResidualEvaluator::new(&lat, &bo, plan.epsilon).unwrap();
    let u0 = cfg.initial_profile().unwrap();
    // advance the frame by exactly 3 lattice sites
    let t = 3.0 / params.c;
    let shift = plan.epsilon * 3.0;
    let moved = SpectralField::from_values(
        u0.grid(),
        u0.grid().nodes().iter().map(|&x| u0.eval_at(x + shift)).collect(),
    )
    .unwrap();
    let a = ev.eval(&BOState::new(u0.clone(), 0.0), 0.0, true).unwrap().values.unwrap();
    let b = ev.eval(&BOState::new(moved, 0.0), t, true).unwrap().values.unwrap();
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    assert!(l2(&diff) < 1e-9 * l2(&a), "{} vs {}", l2(&diff), l2(&a));
}

#[test]
fn validation_run_properties() {
    let mut cfg = small_config(2.0);
    cfg.bidirectional = true;
    let rep = run_validation(&cfg, 2).unwrap();
    assert_eq!(rep.failures().count(), 0);
    for run in &rep.runs {
        // μ(0) = 0 by construction; the A_ε sampling gap obeys its bound
        let first = run.rows.iter().find(|r| r.t == 0.0).unwrap();
        assert_eq!(first.mu_l2, 0.0);
        assert_eq!(first.nu_l2, 0.0);
        assert!(run.initial_mismatch > 0.0);
        assert!(run.initial_mismatch <= 1.1 * run.mismatch_bound);
        // the wave moves: dropping the frame shift must hurt
        assert!(run.final_mu_unshifted > run.final_mu);
        assert!(run.rows.iter().any(|r| r.t < 0.0));
        let last = run.plan.steps as f64 * run.plan.dt;
        assert!(run.rows.iter().any(|r| r.t == last) && run.rows.iter().any(|r| r.t == -last));
        for e in &run.energy {
            assert!(e.small && e.within_bounds, "{:?}", e);
            assert!(e.h >= 0.0);
        }
    }
    // errors grow with ε
    let sups: Vec<f64> = rep.runs.iter().map(|r| r.sup_mu).collect();
    assert!(sups.windows(2).all(|w| w[0] > w[1]), "{:?}", sups);
    let mu = rep.mu.unwrap();
    let rel = rep.relative_mu_slope.unwrap();
    assert!((rel - (mu.slope - (cfg.alpha - 1.5))).abs() < 0.3);
}

#[test]
fn sweeps_are_deterministic_and_thread_independent() {
    let cfg = small_config(2.5);
    let a = residual_sweep(&cfg, 1).unwrap();
    let b = residual_sweep(&cfg, 3).unwrap();
    let rows = |s: &ResidualSweep| -> Vec<u64> {
        s.runs.iter().flat_map(|r| r.rows.iter().map(|x| x.l2.to_bits())).collect()
    };
    assert_eq!(rows(&a), rows(&b));
    let va = run_validation(&cfg, 1).unwrap();
    let vb = run_validation(&cfg, 3).unwrap();
    assert_eq!(va, vb);
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(2.0);
    let sweep = residual_sweep(&cfg, 1).unwrap();
    write_residual_outputs(dir.path(), &sweep).unwrap();
    let text = std::fs::read_to_string(dir.path().join("residual_sweep.csv")).unwrap();
    assert!(text.starts_with("alpha,epsilon,t,l2\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 7);
    let rep = run_validation(&cfg, 1).unwrap();
    write_validation_outputs(dir.path(), &rep).unwrap();
    let text = std::fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert!(text.starts_with("alpha,epsilon,t,mu_l2,nu_l2\n"));
    let dat = std::fs::read_to_string(dir.path().join("validation.dat")).unwrap();
    assert!(dat.starts_with("# alpha epsilon t mu_l2 nu_l2\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(json["mu"]["slope"].is_f64());
    assert!(json["nu"]["target_exponent"].is_f64());
}
