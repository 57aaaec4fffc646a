//! Lattice residual of the long-wave ansatz.
//!
//! For `x̃_j = j + ε^{α-2}v(ε(j - ct), ε^α t)` with `u = -∂_X v`, the amount by
//! which `x̃` misses the lattice equations is `R = a + F` with
//!
//! * `a = -ε^α c² u_X + ε^{2α-1} κ₁ u_τ + ε^{3α-2} v_ττ` (chain rule, time
//!   derivatives taken from the BO equation),
//! * `F = -Σ_m [V_m'(-mε^{α-1}A_{εm}u) - V_m'(-mε^{α-1}A_{-εm}u)]` plus the
//!   linearized far field for `m > M`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bo::{dtau2_v, dtau_u, BOConfig, BOState};
use crate::error::{Error, Result};
use crate::lattice::{v_m_prime, Lattice};
use crate::spectral::{average_symbol, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub epsilon: f64,
    pub t: f64,
    pub l2_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Samples continuum spectra on the lattice points `x0 + εj`, `j = 0..N`.
pub(crate) struct LatticeSampler {
    count: usize,
    slot: Vec<usize>,
    phase: Vec<Complex<f64>>,
    /// continuum mode index carried by the unpaired slot (split in half)
    half: usize,
    half_slots: (usize, usize),
    half_phases: (Complex<f64>, Complex<f64>),
    plan: Arc<dyn Fft<f64>>,
}

impl LatticeSampler {
    pub(crate) fn new(field: &SpectralField<f64>, x0: f64, count: usize) -> Self {
        let grid = field.grid();
        let n = grid.n();
        let half = n / 2;
        let period = grid.period();
        let phase_of = |mode: isize| {
            let k = 2.0 * std::f64::consts::PI * mode as f64 / period;
            let (s, c) = (k * x0).sin_cos();
            Complex::new(c, s)
        };
        let slot_of = |mode: isize| mode.rem_euclid(count as isize) as usize;
        let (slot, phase) = (0..n).map(|j| (slot_of(grid.mode(j)), phase_of(grid.mode(j)))).unzip();
        let h = half as isize;
        Self {
            count,
            slot,
            phase,
            half,
            half_slots: (slot_of(h), slot_of(-h)),
            half_phases: (phase_of(h), phase_of(-h)),
            plan: FftPlanner::new().plan_fft_inverse(count),
        }
    }

    /// Inverse transform of `coeff(j)` (FFT-ordered continuum coefficients),
    /// folded onto the lattice.
    pub(crate) fn sample<F: Fn(usize) -> Complex<f64>>(&self, coeff: F) -> Vec<Complex<f64>> {
        let mut bins = vec![Complex::new(0.0, 0.0); self.count];
        for j in 0..self.slot.len() {
            let c = coeff(j);
            if j == self.half {
                let c = c * 0.5;
                bins[self.half_slots.0] += c * self.half_phases.0;
                bins[self.half_slots.1] += c * self.half_phases.1;
            } else {
                bins[self.slot[j]] += c * self.phase[j];
            }
        }
        self.plan.process(&mut bins);
        bins
    }

    pub(crate) fn sample_real(&self, field: &SpectralField<f64>) -> Vec<f64> {
        let spec = field.spectrum();
        self.sample(|j| spec[j]).into_iter().map(|c| c.re).collect()
    }
}

/// Lattice shift `x0 = -εct mod P` of the comparison frame at time `t`.
pub fn frame_shift(epsilon: f64, c: f64, t: f64, period: f64) -> f64 {
    (-epsilon * c * t).rem_euclid(period)
}

fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Residual evaluator for one ring, one scale and one BO configuration.
pub struct ResidualEvaluator<'a> {
    lattice: &'a Lattice<f64>,
    bo: &'a BOConfig<f64>,
    epsilon: f64,
}

impl<'a> ResidualEvaluator<'a> {
    /// The ring's period `Nε` must match the continuum period.
    pub fn new(lattice: &'a Lattice<f64>, bo: &'a BOConfig<f64>, epsilon: f64) -> Result<Self> {
        if (lattice.config().alpha - bo.params.alpha).abs() > 0.0 {
            return Err(Error::Config("lattice and BO exponents differ".into()));
        }
        Ok(Self { lattice, bo, epsilon })
    }

    /// Spectrum of the chain-rule term `a` and, separately, the linear far-field
    /// force acting on `u`.
    fn linear_parts(&self, state: &BOState<f64>) -> Result<(Vec<Complex<f64>>, Vec<Complex<f64>>)> {
        let u = &state.u;
        let p = &self.bo.params;
        let eps = self.epsilon;
        let alpha = p.alpha;
        let ut = dtau_u(state, self.bo);
        let vtt = dtau2_v(state, self.bo)?;
        let grid = u.grid();
        let c_adv = -eps.powf(alpha) * p.c * p.c;
        let c_t = eps.powf(2.0 * alpha - 1.0) * p.kappa1;
        let c_tt = eps.powf(3.0 * alpha - 2.0);
        let (us, uts, vtts) = (u.spectrum(), ut.spectrum(), vtt.spectrum());
        let half = grid.n() / 2;
        let a = (0..grid.n())
            .map(|j| {
                let ik = if j == half { Complex::new(0.0, 0.0) } else { Complex::new(0.0, grid.wavenumber(j)) };
                us[j] * ik * c_adv + uts[j] * c_t + vtts[j] * c_tt
            })
            .collect();
        let tail = match self.lattice.tail() {
            Some(tail) => (0..grid.n())
                .map(|j| {
                    if j == half {
                        Complex::new(0.0, 0.0)
                    } else {
                        us[j] * tail.continuum_symbol(grid.wavenumber(j), eps, alpha)
                    }
                })
                .collect(),
            None => vec![Complex::new(0.0, 0.0); grid.n()],
        };
        Ok((a, tail))
    }

    fn check(&self, state: &BOState<f64>) -> Result<()> {
        let n_sites = self.lattice.config().n;
        let period = state.u.grid().period();
        if ((n_sites as f64) * self.epsilon - period).abs() > 1e-9 * period {
            return Err(Error::Config(format!(
                "ring of {} sites at epsilon {} does not cover period {}",
                n_sites, self.epsilon, period
            )));
        }
        Ok(())
    }

    /// `R` at the lattice points `ε(j - ct)`, with the finite-range forces
    /// evaluated from the `A_{±εm}` multipliers.
    pub fn eval(&self, state: &BOState<f64>, t: f64, keep_values: bool) -> Result<ResidualSample> {
        self.check(state)?;
        let u = &state.u;
        let grid = u.grid();
        let p = &self.bo.params;
        let eps = self.epsilon;
        let alpha = p.alpha;
        let n_sites = self.lattice.config().n;
        let sampler = LatticeSampler::new(u, frame_shift(eps, p.c, t, grid.period()), n_sites);
        let (a, tail) = self.linear_parts(state)?;
        let mut resid: Vec<f64> = sampler.sample(|j| a[j] + tail[j]).into_iter().map(|c| c.re).collect();

        let us = u.spectrum();
        let k: Vec<f64> = grid.wavenumbers();
        let half = grid.n() / 2;
        let scale = eps.powf(alpha - 1.0);
        for m in 1..=self.lattice.config().cutoff {
            let h = eps * m as f64;
            // A_{h}u + i A_{-h}u in one transform (both fields are real)
            let both = sampler.sample(|j| {
                if j == half {
                    return Complex::new(0.0, 0.0);
                }
                let s = average_symbol(k[j] * h);
                us[j] * s + us[j] * s.conj() * Complex::new(0.0, 1.0)
            });
            let g = -(m as f64) * scale;
            for (r, z) in resid.iter_mut().zip(&both) {
                let plus = v_m_prime(g * z.re, m, alpha).map_err(collision_context(t))?;
                let minus = v_m_prime(g * z.im, m, alpha).map_err(collision_context(t))?;
                *r -= plus - minus;
            }
        }
        Ok(ResidualSample {
            epsilon: eps,
            t,
            l2_norm: l2(&resid),
            values: keep_values.then_some(resid),
        })
    }

    /// Same residual with the force taken from the lattice itself acting on the
    /// sampled ansatz `r̃ = -ε^{α-1}A_ε u`.
    pub fn eval_via_lattice(&self, state: &BOState<f64>, t: f64) -> Result<ResidualSample> {
        self.check(state)?;
        let u = &state.u;
        let grid = u.grid();
        let p = &self.bo.params;
        let eps = self.epsilon;
        let n_sites = self.lattice.config().n;
        let sampler = LatticeSampler::new(u, frame_shift(eps, p.c, t, grid.period()), n_sites);
        let (a, _) = self.linear_parts(state)?;
        let a_sampled: Vec<f64> = sampler.sample(|j| a[j]).into_iter().map(|c| c.re).collect();
        let rt = ansatz_displacement(&sampler, u, eps, p.alpha)?;
        let force = self.lattice.force(&rt).map_err(collision_context(t))?;
        let resid: Vec<f64> = a_sampled.iter().zip(&force).map(|(x, f)| x - f).collect();
        Ok(ResidualSample {
            epsilon: eps,
            t,
            l2_norm: l2(&resid),
            values: Some(resid),
        })
    }
}

/// `r̃_j = -ε^{α-1}(A_ε u)(X_j)` on the sampler's points.
pub(crate) fn ansatz_displacement(
    sampler: &LatticeSampler,
    u: &SpectralField<f64>,
    epsilon: f64,
    alpha: f64,
) -> Result<Vec<f64>> {
    let avg = u.average_op(epsilon)?;
    let scale = -epsilon.powf(alpha - 1.0);
    Ok(sampler.sample_real(&avg).into_iter().map(|v| scale * v).collect())
}

fn collision_context(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Collision { .. } => {
            log::error!("ansatz windows collide at t = {}", t);
            e
        }
        other => other,
    }
}

/// Stand-alone residual at one time; see [`ResidualEvaluator::eval`].
pub fn residual_eval(
    state: &BOState<f64>,
    bo: &BOConfig<f64>,
    epsilon: f64,
    t: f64,
    lattice: &Lattice<f64>,
) -> Result<ResidualSample> {
    ResidualEvaluator::new(lattice, bo, epsilon)?.eval(state, t, false)
}
