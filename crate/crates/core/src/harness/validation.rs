use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{EpsilonPlan, ValidationConfig};
use super::residual::{ansatz_displacement, frame_shift, LatticeSampler, ResidualEvaluator};
use super::ScalingReport;
use crate::bo::{dtau_v, run_to, BOConfig, BOState};
use crate::error::{Error, Result};
use crate::lattice::{Integrator, Lattice, LatticeState};
use crate::spectral::SpectralField;
use crate::AlphaParams64;

/// Lattice initial data `r_j = -ε^{α-1}u₀(εj)`, `p_j = cε^{α-1}u₀(εj)`.
pub fn build_ansatz(u0: &SpectralField<f64>, epsilon: f64, params: &AlphaParams64) -> Result<LatticeState<f64>> {
    let period = u0.grid().period();
    let sites = period / epsilon;
    let n = sites.round();
    if !(n >= 1.0) || (sites - n).abs() > 1e-9 * sites {
        return Err(Error::Config(format!(
            "period {} is not a whole number of lattice spacings {}",
            period, epsilon
        )));
    }
    if u0.mean().abs() > 1e-12 * u0.max_abs().max(1.0) {
        return Err(Error::Precondition(format!("initial profile has mean {}", u0.mean())));
    }
    let samples = u0.sample_shifted(0.0, n as usize);
    let s = epsilon.powf(params.alpha - 1.0);
    Ok(LatticeState {
        r: samples.iter().map(|v| -s * v).collect(),
        p: samples.iter().map(|v| params.c * s * v).collect(),
        t: 0.0,
    })
}

/// Why an ε-run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Non-finite values or a collision; `time` is the lattice time reached.
    BlowUp { time: f64, message: String },
    Failed { message: String },
}

impl RunStatus {
    fn from_error(e: Error, last_time: f64) -> Self {
        match e {
            Error::BlowUp { time } => RunStatus::BlowUp {
                time,
                message: "non-finite state".into(),
            },
            Error::Collision { .. } => RunStatus::BlowUp {
                time: last_time,
                message: e.to_string(),
            },
            Error::Precondition(msg) if msg.contains("displacement") => RunStatus::BlowUp {
                time: last_time,
                message: msg,
            },
            other => RunStatus::Failed {
                message: other.to_string(),
            },
        }
    }

    pub fn completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub alpha: f64,
    pub epsilon: f64,
    pub t: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRun {
    pub plan: EpsilonPlan,
    #[serde(skip)]
    pub rows: Vec<ResidualRow>,
    pub sup: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSweep {
    pub alpha: f64,
    pub runs: Vec<ResidualRun>,
    /// Present when at least three runs completed.
    pub report: Option<ScalingReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub alpha: f64,
    pub epsilon: f64,
    pub t: f64,
    pub mu_l2: f64,
    pub nu_l2: f64,
}

/// Error energy `ℋ` against the exact ansatz `(r̃, p̃)` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub alpha: f64,
    pub epsilon: f64,
    pub t: f64,
    pub h: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub eta_l2: f64,
    pub xi_l2: f64,
    /// `c_lo‖η‖²` and `c_hi‖η‖²`, the bracket for the potential part.
    pub lower: f64,
    pub upper: f64,
    /// Smallness hypotheses `‖η‖, ‖r̃‖ ≤ 1/4` held.
    pub small: bool,
    pub within_bounds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRun {
    pub plan: EpsilonPlan,
    #[serde(skip)]
    pub rows: Vec<ValidationRow>,
    #[serde(skip)]
    pub energy: Vec<EnergyRow>,
    pub sup_mu: f64,
    pub sup_nu: f64,
    /// `‖r(0)‖`
    pub initial_r_l2: f64,
    /// `‖r(0) - r̃(0)‖`, the gap between `u` and `A_ε u` sampling.
    pub initial_mismatch: f64,
    /// `½ε^{α-1/2}‖∂_X u₀‖_{L²}`, which bounds the mismatch.
    pub mismatch_bound: f64,
    /// `‖μ‖` at the last checkpoint, shifted frame and unshifted frame.
    pub final_mu: f64,
    pub final_mu_unshifted: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub alpha: f64,
    pub runs: Vec<EpsilonRun>,
    pub mu: Option<ScalingReport>,
    pub nu: Option<ScalingReport>,
    /// Slope of `sup‖μ‖ / ‖r(0)‖`; `‖r(0)‖ ~ ε^{α-3/2}` so this should sit
    /// `α - 3/2` below the absolute slope.
    pub relative_mu_slope: Option<f64>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &EpsilonRun> {
        self.runs.iter().filter(|r| !r.status.completed())
    }
}

/// Runs `work(i)` for `i = 0..count` on up to `jobs` threads; results keep
/// index order.
pub fn run_jobs<T: Send, F: Fn(usize) -> T + Sync>(count: usize, jobs: usize, work: F) -> Vec<T> {
    let jobs = jobs.clamp(1, count.max(1));
    if jobs == 1 {
        return (0..count).map(work).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= count {
                    break;
                }
                let out = work(i);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|x| x.expect("every index ran"))
        .collect()
}

/// BO states on the plan's checkpoint schedule, `τ_i = ε^α t_i` exactly.
fn bo_schedule(
    u0: &SpectralField<f64>,
    plan: &EpsilonPlan,
    alpha: f64,
    bo: &BOConfig<f64>,
    backward: bool,
) -> Result<Vec<BOState<f64>>> {
    let mut state = BOState::new(u0.clone(), 0.0);
    let mut out = Vec::with_capacity(plan.checkpoint_steps.len());
    for i in 0..plan.checkpoint_steps.len() {
        let tau = plan.slow_time(alpha, plan.time(i, backward));
        if tau != state.tau {
            state = run_to(&state, tau, bo)?.0;
        }
        out.push(state.clone());
    }
    Ok(out)
}

fn directions(config: &ValidationConfig) -> Vec<bool> {
    if config.bidirectional {
        vec![false, true]
    } else {
        vec![false]
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sup_fit(quantity: &str, pairs: Vec<(f64, f64)>, target: f64) -> Option<ScalingReport> {
    if pairs.len() < 3 {
        return None;
    }
    ScalingReport::fit(quantity, pairs, target).ok()
}

fn residual_run(config: &ValidationConfig, plan: &EpsilonPlan) -> ResidualRun {
    let mut rows = Vec::new();
    let mut last_t = 0.0;
    let result = (|| -> Result<()> {
        let params = config.params()?;
        let bo = config.bo_config(&params)?;
        let u0 = config.initial_profile()?;
        let lattice = Lattice::new(config.lattice_config(plan))?;
        let eval = ResidualEvaluator::new(&lattice, &bo, plan.epsilon)?;
        for backward in directions(config) {
            let states = bo_schedule(&u0, plan, config.alpha, &bo, backward)?;
            for (i, state) in states.iter().enumerate() {
                if backward && i == 0 {
                    continue;
                }
                let t = plan.time(i, backward);
                last_t = t;
                let s = eval.eval(state, t, false)?;
                rows.push(ResidualRow {
                    alpha: config.alpha,
                    epsilon: plan.epsilon,
                    t,
                    l2: s.l2_norm,
                });
            }
        }
        Ok(())
    })();
    let status = match result {
        Ok(()) => RunStatus::Completed,
        Err(e) => RunStatus::from_error(e, last_t),
    };
    ResidualRun {
        plan: plan.clone(),
        sup: rows.iter().map(|r| r.l2).fold(0.0, f64::max),
        rows,
        status,
    }
}

/// `sup_t ‖R_ε(t)‖` along the BO solution for every ε, and its fitted exponent.
pub fn residual_sweep(config: &ValidationConfig, jobs: usize) -> Result<ResidualSweep> {
    let plans = config.plan()?;
    let params = config.params()?;
    let runs = run_jobs(plans.len(), jobs, |i| residual_run(config, &plans[i]));
    let pairs = runs
        .iter()
        .filter(|r| r.status.completed())
        .map(|r| (r.plan.epsilon, r.sup))
        .collect();
    Ok(ResidualSweep {
        alpha: config.alpha,
        report: sup_fit("residual", pairs, params.beta),
        runs,
    })
}

/// Compares a lattice state with the ansatz built from `state` at time `t`.
struct Comparison<'a> {
    lattice: &'a Lattice<f64>,
    bo: &'a BOConfig<f64>,
    params: AlphaParams64,
    epsilon: f64,
}

impl Comparison<'_> {
    fn sampler(&self, u: &SpectralField<f64>, t: f64) -> LatticeSampler {
        let x0 = frame_shift(self.epsilon, self.params.c, t, u.grid().period());
        LatticeSampler::new(u, x0, self.lattice.config().n)
    }

    /// `(‖μ‖, ‖ν‖)` in the moving frame.
    fn errors(&self, lat: &LatticeState<f64>, u: &SpectralField<f64>, t: f64) -> (f64, f64) {
        let us = self.sampler(u, t).sample_real(u);
        self.errors_against(lat, &us)
    }

    fn errors_against(&self, lat: &LatticeState<f64>, us: &[f64]) -> (f64, f64) {
        let s = self.epsilon.powf(self.params.alpha - 1.0);
        let c = self.params.c;
        let mu: Vec<f64> = lat.r.iter().zip(us).map(|(r, u)| r + s * u).collect();
        let nu: Vec<f64> = lat.p.iter().zip(us).map(|(p, u)| p - c * s * u).collect();
        (l2(&mu), l2(&nu))
    }

    /// `(r̃, p̃)` with `p̃ = cε^{α-1}u + ε^{2α-2}v_τ`.
    fn ansatz(&self, state: &BOState<f64>, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let eps = self.epsilon;
        let alpha = self.params.alpha;
        let sampler = self.sampler(&state.u, t);
        let rt = ansatz_displacement(&sampler, &state.u, eps, alpha)?;
        let us = sampler.sample_real(&state.u);
        let vt = sampler.sample_real(&dtau_v(state, self.bo)?);
        let a = self.params.c * eps.powf(alpha - 1.0);
        let b = eps.powf(2.0 * alpha - 2.0);
        let pt = us.iter().zip(&vt).map(|(u, v)| a * u + b * v).collect();
        Ok((rt, pt))
    }

    fn energy(&self, lat: &LatticeState<f64>, state: &BOState<f64>, t: f64) -> Result<EnergyRow> {
        let (rt, pt) = self.ansatz(state, t)?;
        let eta: Vec<f64> = lat.r.iter().zip(&rt).map(|(a, b)| a - b).collect();
        let xi: Vec<f64> = lat.p.iter().zip(&pt).map(|(a, b)| a - b).collect();
        let e = self.lattice.error_energy_unchecked(&xi, &eta, &rt)?;
        Ok(EnergyRow {
            alpha: self.params.alpha,
            epsilon: self.epsilon,
            t,
            h: e.total,
            kinetic: e.kinetic,
            potential: e.potential,
            eta_l2: e.eta_norm_sq.sqrt(),
            xi_l2: l2(&xi),
            lower: e.lower_const * e.eta_norm_sq,
            upper: e.upper_const * e.eta_norm_sq,
            small: e.small,
            within_bounds: e.within_bounds(),
        })
    }
}

/// `ℋ(t)` for matched lattice and BO states `(t, lattice, bo)`.
pub fn error_energy_trace(
    lattice: &Lattice<f64>,
    bo: &BOConfig<f64>,
    epsilon: f64,
    pairs: &[(f64, &LatticeState<f64>, &BOState<f64>)],
) -> Result<Vec<EnergyRow>> {
    let cmp = Comparison {
        lattice,
        bo,
        params: bo.params,
        epsilon,
    };
    pairs.iter().map(|(t, lat, st)| cmp.energy(lat, st, *t)).collect()
}

fn validation_run(config: &ValidationConfig, plan: &EpsilonPlan) -> EpsilonRun {
    let mut run = EpsilonRun {
        plan: plan.clone(),
        rows: Vec::new(),
        energy: Vec::new(),
        sup_mu: 0.0,
        sup_nu: 0.0,
        initial_r_l2: 0.0,
        initial_mismatch: 0.0,
        mismatch_bound: 0.0,
        final_mu: 0.0,
        final_mu_unshifted: 0.0,
        status: RunStatus::Completed,
    };
    let mut last_t = 0.0;
    let result = validation_body(config, plan, &mut run, &mut last_t);
    if let Err(e) = result {
        log::error!("alpha {} epsilon {} stopped at t = {}: {}", config.alpha, plan.epsilon, last_t, e);
        run.status = RunStatus::from_error(e, last_t);
    }
    run.sup_mu = run.rows.iter().map(|r| r.mu_l2).fold(0.0, f64::max);
    run.sup_nu = run.rows.iter().map(|r| r.nu_l2).fold(0.0, f64::max);
    run
}

fn validation_body(config: &ValidationConfig, plan: &EpsilonPlan, run: &mut EpsilonRun, last_t: &mut f64) -> Result<()> {
    let params = config.params()?;
    let bo = config.bo_config(&params)?;
    let u0 = config.initial_profile()?;
    let lattice = Lattice::new(config.lattice_config(plan))?;
    let cmp = Comparison {
        lattice: &lattice,
        bo: &bo,
        params,
        epsilon: plan.epsilon,
    };
    let start = build_ansatz(&u0, plan.epsilon, &params)?;
    run.initial_r_l2 = l2(&start.r);
    let (rt0, _) = cmp.ansatz(&BOState::new(u0.clone(), 0.0), 0.0)?;
    run.initial_mismatch = l2(&start.r.iter().zip(&rt0).map(|(a, b)| a - b).collect::<Vec<_>>());
    run.mismatch_bound = 0.5 * plan.epsilon.powf(params.alpha - 0.5) * u0.derivative().l2_norm();

    for backward in directions(config) {
        let states = bo_schedule(&u0, plan, config.alpha, &bo, backward)?;
        let dt = if backward { -plan.dt } else { plan.dt };
        let mut integ = Integrator::new(&lattice, start.clone())?;
        let mut done = 0u64;
        for (i, state) in states.iter().enumerate() {
            let target = plan.checkpoint_steps[i];
            integ.advance_dt((target - done) as usize, dt)?;
            done = target;
            let t = plan.time(i, backward);
            *last_t = t;
            let lat = integ.state();
            debug_assert_eq!(lat.t, t);
            debug_assert_eq!(state.tau, plan.slow_time(config.alpha, t));
            if backward && i == 0 {
                continue;
            }
            let (mu, nu) = cmp.errors(lat, &state.u, t);
            run.rows.push(ValidationRow {
                alpha: config.alpha,
                epsilon: plan.epsilon,
                t,
                mu_l2: mu,
                nu_l2: nu,
            });
            run.energy.push(cmp.energy(lat, state, t)?);
            if !backward && i + 1 == states.len() {
                run.final_mu = mu;
                let unshifted = LatticeSampler::new(&state.u, 0.0, plan.n_sites).sample_real(&state.u);
                run.final_mu_unshifted = cmp.errors_against(lat, &unshifted).0;
            }
        }
    }
    Ok(())
}

/// Evolves lattice and BO side by side for every ε and fits the error exponents.
pub fn run_validation(config: &ValidationConfig, jobs: usize) -> Result<ValidationReport> {
    let plans = config.plan()?;
    let params = config.params()?;
    let runs = run_jobs(plans.len(), jobs, |i| validation_run(config, &plans[i]));
    let ok: Vec<&EpsilonRun> = runs.iter().filter(|r| r.status.completed()).collect();
    let mu = sup_fit("mu", ok.iter().map(|r| (r.plan.epsilon, r.sup_mu)).collect(), params.gamma);
    let nu = sup_fit("nu", ok.iter().map(|r| (r.plan.epsilon, r.sup_nu)).collect(), params.gamma);
    let relative = sup_fit(
        "relative mu",
        ok.iter().map(|r| (r.plan.epsilon, r.sup_mu / r.initial_r_l2)).collect(),
        params.gamma - params.alpha + 1.5,
    );
    Ok(ValidationReport {
        alpha: config.alpha,
        runs,
        mu,
        nu,
        relative_mu_slope: relative.map(|r| r.slope),
    })
}
