use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bo::{gaussian_profile, BOConfig};
use crate::error::{Error, Result};
use crate::lattice::{nonlinear_tail_cutoff, FarField, LatticeConfig};
use crate::spectral::{PeriodicGrid, SpectralField};
use crate::AlphaParams64;

/// Experiment description. Every field has a default so partial JSON files work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub alpha: f64,
    /// Requested scales, strictly descending. Each is nudged to `P/N` for an
    /// integer ring size `N`.
    pub epsilons: Vec<f64>,
    /// Slow-time horizon; the lattice runs to `|t| ≤ tau0/ε^α`.
    pub tau0: f64,
    pub bo: BoSeed,
    pub lattice: LatticeSeed,
    pub profile: Profile,
    /// Number of comparison intervals per run (`checkpoints + 1` sample times).
    pub checkpoints: usize,
    pub output: PathBuf,
    /// Also run backwards in time.
    pub bidirectional: bool,
    pub zeta_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            epsilons: vec![0.2, 0.141, 0.1, 0.0707],
            tau0: 0.25,
            bo: BoSeed::default(),
            lattice: LatticeSeed::default(),
            profile: Profile::default(),
            checkpoints: 20,
            output: PathBuf::from("out"),
            bidirectional: false,
            zeta_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoSeed {
    pub n: usize,
    pub dtau: f64,
    pub dealias_fraction: f64,
}

impl Default for BoSeed {
    fn default() -> Self {
        Self {
            n: 1024,
            dtau: 1e-3,
            dealias_fraction: 2.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSeed {
    pub dt: f64,
    pub cutoff: CutoffPolicy,
    pub far_field: FarField,
}

impl Default for LatticeSeed {
    fn default() -> Self {
        Self {
            dt: 0.05,
            cutoff: CutoffPolicy::default(),
            far_field: FarField::LinearTail,
        }
    }
}

/// How the exact-interaction range `M` is chosen per ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffPolicy {
    Fixed { m: usize },
    /// Neglected nonlinear interactions below `fraction·ε^β‖u₀‖_{L²}` in ℓ².
    Budget { fraction: f64 },
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy::Budget { fraction: 1e-3 }
    }
}

/// Mean-free Gaussian bump on a ring of length `period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub amplitude: f64,
    pub width: f64,
    pub period: f64,
}

impl Default for Profile {
    fn default() -> Self {
        Self {
            amplitude: 0.1,
            width: 102.4 / 20.0,
            period: 102.4,
        }
    }
}

/// Resolved per-ε run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPlan {
    pub requested_epsilon: f64,
    /// `P/N`, the scale actually simulated.
    pub epsilon: f64,
    pub n_sites: usize,
    pub cutoff: usize,
    pub dt: f64,
    /// Steps to reach `tau0/ε^α` (rounded up).
    pub steps: u64,
    /// Step counts at which errors are sampled, starting at 0.
    pub checkpoint_steps: Vec<u64>,
}

impl EpsilonPlan {
    /// Lattice time of checkpoint `i`; negative when `backward`.
    pub fn time(&self, i: usize, backward: bool) -> f64 {
        let t = self.checkpoint_steps[i] as f64 * self.dt;
        if backward {
            -t
        } else {
            t
        }
    }

    /// BO time on the shared clock, `ε^α t`.
    pub fn slow_time(&self, alpha: f64, t: f64) -> f64 {
        self.epsilon.powf(alpha) * t
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 3.0) {
            return Err(Error::Config(format!("alpha must lie in (1, 3), got {}", self.alpha)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("no epsilons given".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 0.5)) {
            return Err(Error::Config(format!("epsilon {} outside (0, 0.5)", e)));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("epsilons must be strictly descending".into()));
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::Config(format!("tau0 must be positive, got {}", self.tau0)));
        }
        if self.checkpoints == 0 {
            return Err(Error::Config("checkpoints must be at least 1".into()));
        }
        let p = &self.profile;
        if !(p.period > 0.0 && p.width > 0.0 && p.amplitude.is_finite()) {
            return Err(Error::Config("profile needs positive period and width".into()));
        }
        if let CutoffPolicy::Budget { fraction } = self.lattice.cutoff {
            if !(fraction > 0.0) {
                return Err(Error::Config("cutoff budget fraction must be positive".into()));
            }
        }
        if !(self.lattice.dt > 0.0) {
            return Err(Error::Config(format!("lattice dt must be positive, got {}", self.lattice.dt)));
        }
        self.bo_config(&self.params()?)?.validate()?;
        PeriodicGrid::<f64>::new(p.period, self.bo.n)?;
        Ok(())
    }

    pub fn params(&self) -> Result<AlphaParams64> {
        AlphaParams64::new(self.alpha, self.zeta_tol)
    }

    pub fn grid(&self) -> Result<PeriodicGrid<f64>> {
        PeriodicGrid::new(self.profile.period, self.bo.n)
    }

    pub fn initial_profile(&self) -> Result<SpectralField<f64>> {
        Ok(gaussian_profile(&self.grid()?, self.profile.amplitude, self.profile.width))
    }

    pub fn bo_config(&self, params: &AlphaParams64) -> Result<BOConfig<f64>> {
        let mut cfg = BOConfig::new(*params, self.bo.dtau);
        cfg.dealias_fraction = self.bo.dealias_fraction;
        Ok(cfg)
    }

    /// Ring size and effective scale for a requested ε.
    pub fn commensurate(&self, requested: f64) -> Result<(usize, f64)> {
        let n = (self.profile.period / requested).round();
        if n < 16.0 {
            return Err(Error::Config(format!(
                "epsilon {} gives only {} sites on period {}",
                requested, n, self.profile.period
            )));
        }
        let n = n as usize;
        Ok((n, self.profile.period / n as f64))
    }

    /// Resolves ring sizes, cutoffs and the checkpoint schedule for every ε.
    pub fn plan(&self) -> Result<Vec<EpsilonPlan>> {
        self.validate()?;
        let params = self.params()?;
        let u0 = self.initial_profile()?;
        let v0 = u0.antiderivative_meanzero()?;
        let osc = v0.values().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - v0.values().iter().fold(f64::INFINITY, |a, &b| a.min(b));
        self.epsilons
            .iter()
            .map(|&requested| {
                let (n_sites, epsilon) = self.commensurate(requested)?;
                let cutoff = match self.lattice.cutoff {
                    CutoffPolicy::Fixed { m } => m,
                    CutoffPolicy::Budget { fraction } => {
                        // |G_m r̃| ≤ ε^{α-2} osc(v) for every window
                        let spread = epsilon.powf(self.alpha - 2.0) * osc;
                        let budget = fraction * epsilon.powf(params.beta) * u0.l2_norm();
                        nonlinear_tail_cutoff(self.alpha, n_sites, spread, budget)
                    }
                };
                let dt = self.lattice.dt;
                let horizon = self.tau0 / epsilon.powf(self.alpha);
                let steps = (horizon / dt).ceil() as u64;
                let c = self.checkpoints as u64;
                let mut checkpoint_steps: Vec<u64> =
                    (0..=c).map(|i| ((i * steps) as f64 / c as f64).round() as u64).collect();
                checkpoint_steps.dedup();
                let plan = EpsilonPlan {
                    requested_epsilon: requested,
                    epsilon,
                    n_sites,
                    cutoff,
                    dt,
                    steps,
                    checkpoint_steps,
                };
                self.lattice_config(&plan).validate()?;
                Ok(plan)
            })
            .collect()
    }

    pub fn lattice_config(&self, plan: &EpsilonPlan) -> LatticeConfig<f64> {
        let mut cfg = LatticeConfig::new(plan.n_sites, self.alpha, plan.cutoff, plan.dt);
        cfg.far_field = self.lattice.far_field;
        cfg
    }
}
