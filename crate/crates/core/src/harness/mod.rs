//! Long-wave validation experiments (double precision only).
//!
//! A run builds the lattice ansatz from a BO solution, evolves both systems on
//! a shared clock `τ = ε^α t`, and records the residual of the ansatz and the
//! errors `μ = r + ε^{α-1}u(ε(j - ct), τ)`, `ν = p - cε^{α-1}u(ε(j - ct), τ)`.
//! Log-log fits across ε give the measured exponents.

mod config;
mod output;
mod residual;
mod validation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{BoSeed, CutoffPolicy, EpsilonPlan, LatticeSeed, Profile, ValidationConfig};
pub use output::{write_residual_outputs, write_validation_outputs};
pub use residual::{frame_shift, residual_eval, ResidualEvaluator, ResidualSample};
pub use validation::{
    build_ansatz, error_energy_trace, residual_sweep, run_jobs, run_validation, EnergyRow, EpsilonRun,
    ResidualRow, ResidualRun, ResidualSweep, RunStatus, ValidationReport, ValidationRow,
};

/// Least-squares line through `(ln ε, ln error)`: `(slope, intercept, r²)`.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if pairs.len() < 3 {
        return Err(Error::Argument(format!("need at least 3 pairs, got {}", pairs.len())));
    }
    if let Some(p) = pairs.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0)) {
        return Err(Error::Argument(format!("log-log fit needs positive pairs, got {:?}", p)));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("all epsilons coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, intercept, r_squared))
}

/// Fitted power law `error ≈ e^{intercept} ε^{slope}` against a target exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub quantity: String,
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub target_exponent: f64,
    pub r_squared: f64,
}

impl ScalingReport {
    pub fn fit(quantity: &str, pairs: Vec<(f64, f64)>, target_exponent: f64) -> Result<Self> {
        let (slope, intercept, r_squared) = fit_slope(&pairs)?;
        Ok(Self {
            quantity: quantity.to_string(),
            pairs,
            slope,
            intercept,
            target_exponent,
            r_squared,
        })
    }

    pub fn within(&self, tolerance: f64) -> bool {
        (self.slope - self.target_exponent).abs() <= tolerance
    }

    pub fn predicted(&self, epsilon: f64) -> f64 {
        (self.intercept + self.slope * epsilon.ln()).exp()
    }

    /// Largest `measured / fitted` over the sweep.
    pub fn worst_ratio(&self) -> f64 {
        self.pairs
            .iter()
            .map(|&(e, v)| v / self.predicted(e))
            .fold(0.0, f64::max)
    }
}
