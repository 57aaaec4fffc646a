//! Pseudo-spectral solver for `κ₁u_τ + κ₂uu_X + κ₃H|D|^αu = 0` on a periodic grid.
//!
//! Time stepping is integrating-factor RK4: the dispersive term is diagonal in
//! Fourier space and is propagated exactly, the quadratic term is evaluated
//! pseudo-spectrally with truncation dealiasing.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::AlphaParams;
use crate::spectral::{PeriodicGrid, SpectralField};

/// Solution snapshot at slow time `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct BOState<T: Real> {
    pub u: SpectralField<T>,
    pub tau: T,
}

impl<T: Real> BOState<T> {
    pub fn new(u: SpectralField<T>, tau: T) -> Self {
        Self { u, tau }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BOConfig<T: Real> {
    pub params: AlphaParams<T>,
    pub dtau: T,
    /// Fraction of the resolved band kept in the quadratic term.
    pub dealias_fraction: T,
    /// Slow times at which [`run_to`] records a trace row.
    pub checkpoints: Vec<T>,
    /// Drop the quadratic term (linear dispersion checks).
    pub linear_only: bool,
}

impl<T: Real> BOConfig<T> {
    pub fn new(params: AlphaParams<T>, dtau: T) -> Self {
        Self {
            params,
            dtau,
            dealias_fraction: T::lit(2.0 / 3.0),
            checkpoints: Vec::new(),
            linear_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dtau > T::zero()) || !self.dtau.is_finite() {
            return Err(Error::Config(format!("dtau must be positive, got {}", self.dtau)));
        }
        if !(self.dealias_fraction > T::lit(0.5) && self.dealias_fraction <= T::one()) {
            return Err(Error::Config(format!(
                "dealias fraction must lie in (0.5, 1], got {}",
                self.dealias_fraction
            )));
        }
        Ok(())
    }

    /// `κ₂/κ₁` (zero when the quadratic term is switched off).
    pub fn nonlinear_coeff(&self) -> T {
        if self.linear_only {
            T::zero()
        } else {
            self.params.kappa2 / self.params.kappa1
        }
    }

    /// `κ₃/κ₁`
    pub fn dispersive_coeff(&self) -> T {
        self.params.kappa3 / self.params.kappa1
    }
}

/// One monitor row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub tau: T,
    pub mean: T,
    pub l2: T,
    pub h6: T,
}

impl<T: Real> TraceRow<T> {
    pub fn of(state: &BOState<T>) -> Self {
        Self {
            tau: state.tau,
            mean: state.u.mean(),
            l2: state.u.l2_norm(),
            h6: state.u.sobolev_norm(T::lit(6.0)),
        }
    }
}

struct Stepper<'a, T: Real> {
    grid: &'a PeriodicGrid<T>,
    nonlinear: T,
    keep: Vec<bool>,
    /// `i (κ₃/κ₁) sgn(k)|k|^α`
    lambda: Vec<Complex<T>>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(grid: &'a PeriodicGrid<T>, config: &BOConfig<T>) -> Self {
        let n = grid.n();
        let cutoff = (config.dealias_fraction * T::idx(n / 2)).floor().as_f64() as usize;
        let b = config.dispersive_coeff();
        let alpha = config.params.alpha;
        let lambda = (0..n)
            .map(|j| {
                let k = grid.wavenumber(j);
                Complex::new(T::zero(), b * k.signum() * k.abs().powf(alpha))
            })
            .collect();
        Self {
            grid,
            nonlinear: config.nonlinear_coeff(),
            keep: (0..n).map(|j| grid.mode(j).unsigned_abs() <= cutoff).collect(),
            lambda,
        }
    }

    /// `-(κ₂/κ₁) P(u_d ∂_X u_d)` in Fourier space, `u_d` the dealiased field.
    fn nonlinear(&self, spec: &[Complex<T>]) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        if self.nonlinear == T::zero() {
            return vec![zero; spec.len()];
        }
        let trunc: Vec<Complex<T>> = spec
            .iter()
            .zip(&self.keep)
            .map(|(c, &k)| if k { *c } else { zero })
            .collect();
        let deriv: Vec<Complex<T>> = trunc
            .iter()
            .enumerate()
            .map(|(j, c)| *c * Complex::new(T::zero(), self.grid.wavenumber(j)))
            .collect();
        let u = self.grid.inverse(&trunc);
        let ux = self.grid.inverse(&deriv);
        let prod: Vec<T> = u.iter().zip(&ux).map(|(a, b)| *a * *b).collect();
        self.grid
            .forward(&prod)
            .into_iter()
            .zip(&self.keep)
            .map(|(c, &k)| if k { c * (-self.nonlinear) } else { zero })
            .collect()
    }

    fn linear(&self, spec: &[Complex<T>]) -> Vec<Complex<T>> {
        let half = self.grid.n() / 2;
        spec.iter()
            .zip(&self.lambda)
            .enumerate()
            .map(|(j, (c, l))| if j == half { Complex::new(T::zero(), T::zero()) } else { *c * *l })
            .collect()
    }

    fn propagator(&self, h: T) -> Vec<Complex<T>> {
        let half = self.grid.n() / 2;
        self.lambda
            .iter()
            .enumerate()
            .map(|(j, l)| {
                if j == half {
                    Complex::new(T::zero(), T::zero())
                } else {
                    let (s, c) = (l.im * h).sin_cos();
                    Complex::new(c, s)
                }
            })
            .collect()
    }

    fn step(&self, spec: &[Complex<T>], h: T) -> Vec<Complex<T>> {
        let e_half = self.propagator(h * T::lit(0.5));
        let e_full = self.propagator(h);
        let hh = h * T::lit(0.5);
        let n = spec.len();
        let k1 = self.nonlinear(spec);
        let a: Vec<_> = (0..n).map(|j| e_half[j] * (spec[j] + k1[j] * hh)).collect();
        let k2 = self.nonlinear(&a);
        let b: Vec<_> = (0..n).map(|j| e_half[j] * spec[j] + k2[j] * hh).collect();
        let k3 = self.nonlinear(&b);
        let c: Vec<_> = (0..n).map(|j| e_full[j] * spec[j] + e_half[j] * k3[j] * h).collect();
        let k4 = self.nonlinear(&c);
        let sixth = h / T::lit(6.0);
        let two = T::lit(2.0);
        (0..n)
            .map(|j| {
                e_full[j] * spec[j]
                    + (e_full[j] * k1[j] + e_half[j] * (k2[j] + k3[j]) * two + k4[j]) * sixth
            })
            .collect()
    }
}

/// `u_τ = -(κ₂/κ₁)uu_X - (κ₃/κ₁)H|D|^αu`, quadratic term dealiased.
pub fn bo_rhs<T: Real>(state: &BOState<T>, config: &BOConfig<T>) -> SpectralField<T> {
    let grid = state.u.grid();
    let stepper = Stepper::new(grid, config);
    let spec = state.u.spectrum();
    let nl = stepper.nonlinear(spec);
    let lin = stepper.linear(spec);
    let total = nl.iter().zip(&lin).map(|(a, b)| *a + *b).collect();
    SpectralField::from_spectrum(grid, total).expect("length matches grid")
}

fn check_finite<T: Real>(u: &SpectralField<T>, tau: T) -> Result<()> {
    if u.values().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { time: tau.as_f64() })
    }
}

fn cfl_check<T: Real>(state: &BOState<T>, config: &BOConfig<T>, h: T) {
    let number = h.abs() * config.nonlinear_coeff().abs() * state.u.max_abs() * state.u.grid().k_max();
    if number > T::one() {
        log::warn!(
            "BO step exceeds the advective CFL bound: dtau*|a u|*k_max = {} at tau = {}",
            number,
            state.tau
        );
    }
}

fn step_signed<T: Real>(state: &BOState<T>, config: &BOConfig<T>, h: T) -> Result<BOState<T>> {
    cfl_check(state, config, h);
    let grid = state.u.grid();
    let stepper = Stepper::new(grid, config);
    let next = stepper.step(state.u.spectrum(), h);
    let u = SpectralField::from_spectrum(grid, next)?;
    let tau = state.tau + h;
    check_finite(&u, tau)?;
    Ok(BOState { u, tau })
}

/// One IF-RK4 step of size `config.dtau`.
pub fn step<T: Real>(state: &BOState<T>, config: &BOConfig<T>) -> Result<BOState<T>> {
    config.validate()?;
    step_signed(state, config, config.dtau)
}

/// Integrates from `state.tau` to `tau_end` in equal steps of size at most
/// `config.dtau` (backwards when `tau_end < state.tau`). Checkpoints from
/// `config.checkpoints` inside the interval are hit exactly; the trace holds
/// the initial state, every checkpoint and the final state.
pub fn run_to<T: Real>(
    state: &BOState<T>,
    tau_end: T,
    config: &BOConfig<T>,
) -> Result<(BOState<T>, Vec<TraceRow<T>>)> {
    config.validate()?;
    let start = state.tau;
    let forward = tau_end >= start;
    let mut stops: Vec<T> = config
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| if forward { c > start && c < tau_end } else { c < start && c > tau_end })
        .collect();
    stops.sort_by(|a, b| a.partial_cmp(b).expect("finite checkpoints"));
    if !forward {
        stops.reverse();
    }
    stops.push(tau_end);

    let stepper = Stepper::new(state.u.grid(), config);
    let mut trace = vec![TraceRow::of(state)];
    let mut current = state.clone();
    for stop in stops {
        let span = stop - current.tau;
        if span == T::zero() {
            continue;
        }
        let count = (span.abs() / config.dtau).ceil().max(T::one());
        let h = span / count;
        let count = count.as_f64() as usize;
        cfl_check(&current, config, h);
        let base = current.tau;
        let grid = current.u.grid().clone();
        let mut spec = current.u.spectrum().to_vec();
        for i in 0..count {
            spec = stepper.step(&spec, h);
            if spec.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::BlowUp {
                    time: (base + h * T::idx(i + 1)).as_f64(),
                });
            }
        }
        let u = SpectralField::from_spectrum(&grid, spec)?;
        check_finite(&u, stop)?;
        current = BOState { u, tau: stop };
        trace.push(TraceRow::of(&current));
    }
    Ok((current, trace))
}

/// `∂_τu` from the equation itself.
pub fn dtau_u<T: Real>(state: &BOState<T>, config: &BOConfig<T>) -> SpectralField<T> {
    bo_rhs(state, config)
}

/// `∂_τv` for `v = -∫u`: `(κ₂/κ₁)u²/2 - (κ₃/κ₁)|D|^{α-1}u` up to a constant,
/// chosen so the result has zero mean (no net drift of the ring).
pub fn dtau_v<T: Real>(state: &BOState<T>, config: &BOConfig<T>) -> Result<SpectralField<T>> {
    let u = &state.u;
    check_mean_zero(u)?;
    let a = config.nonlinear_coeff();
    let b = config.dispersive_coeff();
    let frac = u.frac_deriv(config.params.alpha - T::one());
    let raw = u.mul(u)?.axpby(a * T::lit(0.5), &frac, -b)?;
    remove_mean(&raw)
}

fn check_mean_zero<T: Real>(u: &SpectralField<T>) -> Result<()> {
    let scale = u.max_abs();
    if u.mean().abs() > T::lit(1e-10).max(T::epsilon() * T::lit(256.0) * scale) {
        return Err(Error::Precondition(format!(
            "the v-equation needs a mean-zero u, mean = {}",
            u.mean()
        )));
    }
    Ok(())
}

fn remove_mean<T: Real>(f: &SpectralField<T>) -> Result<SpectralField<T>> {
    let mean = f.mean();
    let shifted = f.values().iter().map(|&x| x - mean).collect();
    SpectralField::from_values(f.grid(), shifted)
}

/// `∂_τ²v = (κ₂/κ₁)u u_τ - (κ₃/κ₁)|D|^{α-1}u_τ`, mean-free like [`dtau_v`].
/// A constant here would be a uniform acceleration no ring can follow.
pub fn dtau2_v<T: Real>(state: &BOState<T>, config: &BOConfig<T>) -> Result<SpectralField<T>> {
    let u = &state.u;
    check_mean_zero(u)?;
    let ut = dtau_u(state, config);
    let a = config.nonlinear_coeff();
    let b = config.dispersive_coeff();
    let frac = ut.frac_deriv(config.params.alpha - T::one());
    let raw = u.mul(&ut)?.axpby(a, &frac, -b)?;
    remove_mean(&raw)
}

/// Mean-zero Gaussian `a·exp(-(X-P/2)²/w²) - mean`.
pub fn gaussian_profile<T: Real>(grid: &PeriodicGrid<T>, amplitude: T, width: T) -> SpectralField<T> {
    let center = grid.period() * T::lit(0.5);
    let raw = SpectralField::from_fn(grid, |x| {
        let z = (x - center) / width;
        amplitude * (-z * z).exp()
    });
    let mean = raw.mean();
    let values = raw.values().iter().map(|&v| v - mean).collect();
    SpectralField::from_values(grid, values).expect("length matches grid")
}
