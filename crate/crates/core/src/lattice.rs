//! Power-law particle ring in relative coordinates.
//!
//! With `r_j = x_{j+1} - x_j - 1` and `p_j = ẋ_j` the equations of motion are
//! `ṙ_j = p_{j+1} - p_j`, `ṗ_j = Σ_m [V_m'(G_m r)_j - V_m'(G_m r)_{j-m}]`, where
//! `G_m r_j = r_j + … + r_{j+m-1}` and
//! `V_m(g) = (m+g)^{-α} - m^{-α} + αg m^{-α-1}`.
//!
//! Interactions up to range `M` are evaluated exactly. Beyond `M` the ring can
//! either ignore them ([`FarField::Truncated`]) or add their linearization
//! summed over every periodic image ([`FarField::LinearTail`]); the latter
//! keeps the long-wave speed `c_α` exact.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::{hurwitz_zeta, zeta};

const SERIES_CROSSOVER: f64 = 1e-3;

/// `(1+y)^{-p} - 1 + p y`, the second-order Taylor remainder of `(1+y)^{-p}`.
fn rem2<T: Real>(p: T, y: T) -> T {
    if y.abs() < T::lit(SERIES_CROSSOVER) {
        // Σ_{k=2}^{5} binom(-p, k) y^k
        let two = T::lit(2.0);
        let t2 = p * (p + T::one()) / two * y * y;
        let t3 = -t2 * (p + two) / T::lit(3.0) * y;
        let t4 = -t3 * (p + T::lit(3.0)) / T::lit(4.0) * y;
        let t5 = -t4 * (p + T::lit(4.0)) / T::lit(5.0) * y;
        t2 + t3 + t4 + t5
    } else {
        (-p * y.ln_1p()).exp_m1() + p * y
    }
}

/// `1 - (1+y)^{-p}`
fn rem1<T: Real>(p: T, y: T) -> T {
    if y.abs() < T::lit(SERIES_CROSSOVER) {
        let t1 = p * y;
        let t2 = -t1 * (p + T::one()) / T::lit(2.0) * y;
        let t3 = -t2 * (p + T::lit(2.0)) / T::lit(3.0) * y;
        let t4 = -t3 * (p + T::lit(3.0)) / T::lit(4.0) * y;
        t1 + t2 + t3 + t4
    } else {
        -(-p * y.ln_1p()).exp_m1()
    }
}

fn check_gap<T: Real>(base: T, g: T, window: usize) -> Result<()> {
    if !(base + g > T::zero()) {
        return Err(Error::Collision {
            site: 0,
            window,
            separation: (base + g).as_f64(),
        });
    }
    Ok(())
}

/// Pair potential `V_m(g)`; `g > -m`.
pub fn v_m<T: Real>(g: T, m: usize, alpha: T) -> Result<T> {
    let mf = T::idx(m);
    check_gap(mf, g, m)?;
    Ok(mf.powf(-alpha) * rem2(alpha, g / mf))
}

/// `V_m'(g) = -α(m+g)^{-α-1} + α m^{-α-1}`.
pub fn v_m_prime<T: Real>(g: T, m: usize, alpha: T) -> Result<T> {
    let mf = T::idx(m);
    check_gap(mf, g, m)?;
    Ok(alpha * mf.powf(-alpha - T::one()) * rem1(alpha + T::one(), g / mf))
}

/// `W_m(a,b) = V_m(b+a) - V_m(b) - V_m'(b)a = (m+b)^{-α} rem₂(α, a/(m+b))`.
pub fn w_m<T: Real>(a: T, b: T, m: usize, alpha: T) -> Result<T> {
    let base = T::idx(m) + b;
    check_gap(T::idx(m), b, m)?;
    check_gap(base, a, m)?;
    Ok(base.powf(-alpha) * rem2(alpha, a / base))
}

/// `∂_a W_m(a,b)`
pub fn w_m_prime<T: Real>(a: T, b: T, m: usize, alpha: T) -> Result<T> {
    let base = T::idx(m) + b;
    check_gap(T::idx(m), b, m)?;
    check_gap(base, a, m)?;
    Ok(alpha * base.powf(-alpha - T::one()) * rem1(alpha + T::one(), a / base))
}

/// `∂_b W_m(a,b) = -α(m+b)^{-α-1} rem₂(α+1, a/(m+b))`
pub fn w_m_db<T: Real>(a: T, b: T, m: usize, alpha: T) -> Result<T> {
    let base = T::idx(m) + b;
    check_gap(T::idx(m), b, m)?;
    check_gap(base, a, m)?;
    Ok(-alpha * base.powf(-alpha - T::one()) * rem2(alpha + T::one(), a / base))
}

/// Periodic prefix sums `S_i = r_0 + … + r_{i-1}` for `i ≤ n + extra`.
fn prefix<T: Real>(r: &[T], extra: usize) -> Vec<T> {
    let n = r.len();
    let mut out = Vec::with_capacity(n + extra + 1);
    let mut acc = T::zero();
    out.push(acc);
    for i in 0..n + extra {
        acc = acc + r[i % n];
        out.push(acc);
    }
    out
}

/// Windowed sum `(G_m r)_j = Σ_{l<m} r_{j+l}` on the ring.
pub fn gsum<T: Real>(r: &[T], m: usize) -> Result<Vec<T>> {
    let n = r.len();
    if m == 0 || m > n {
        return Err(Error::Argument(format!("window {} outside 1..={}", m, n)));
    }
    let s = prefix(r, m);
    Ok((0..n).map(|j| s[j + m] - s[j]).collect())
}

/// `(δ_m^- f)_j = f_j - f_{j-m}`
fn delta_minus_acc<T: Real>(f: &[T], m: usize, out: &mut [T]) {
    let n = f.len();
    let m = m % n;
    for j in 0..m {
        out[j] = out[j] + f[j] - f[j + n - m];
    }
    for j in m..n {
        out[j] = out[j] + f[j] - f[j - m];
    }
}

/// How interactions beyond the cutoff are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FarField {
    /// Ranges `m > M` are dropped.
    Truncated,
    /// Ranges `m > M` enter through `V_m'(g) ≈ α(α+1)m^{-α-2}g`, summed over all
    /// periodic images in closed form.
    #[default]
    LinearTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig<T> {
    pub n: usize,
    pub alpha: T,
    pub cutoff: usize,
    pub dt: T,
    #[serde(default)]
    pub far_field: FarField,
}

impl<T: Real> LatticeConfig<T> {
    pub fn new(n: usize, alpha: T, cutoff: usize, dt: T) -> Self {
        Self {
            n,
            alpha,
            cutoff,
            dt,
            far_field: FarField::LinearTail,
        }
    }

    pub fn truncated(mut self) -> Self {
        self.far_field = FarField::Truncated;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::Config(format!("ring needs at least 16 sites, got {}", self.n)));
        }
        if self.cutoff < 1 || self.cutoff + 1 > self.n / 2 {
            return Err(Error::Config(format!(
                "cutoff {} outside 1..={}",
                self.cutoff,
                self.n / 2 - 1
            )));
        }
        if !(self.alpha > T::one()) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState<T> {
    pub r: Vec<T>,
    pub p: Vec<T>,
    pub t: T,
}

impl<T: Real> LatticeState<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            r: vec![T::zero(); n],
            p: vec![T::zero(); n],
            t: T::zero(),
        }
    }

    pub fn momentum(&self) -> T {
        self.p.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Linearized interactions of range `m > M` on a ring of `N` sites.
///
/// In Fourier variables `r_j = Σ_q r̂_q e^{2πiqj/N}` the tail force is
/// `-α(α+1) Λ(q)/(e^{ik}-1) r̂_q` with `Λ(q) = Σ_{m>M} m^{-α-2}(2 - 2cos(km))`.
#[derive(Clone)]
pub struct LinearTail<T: Real> {
    n: usize,
    lambda: Vec<T>,
    /// `Σ_{m>M} m^{-α}`, the constant-mode energy weight
    flat: T,
    stiffness: T,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for LinearTail<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearTail").field("n", &self.n).finish()
    }
}

impl<T: Real> LinearTail<T> {
    pub fn new(n: usize, cutoff: usize, alpha: T) -> Result<Self> {
        let s = alpha + T::lit(2.0);
        let nf = T::idx(n);
        // H(ρ) = Σ_{m>M, m≡ρ mod N} m^{-s}
        let mut h = Vec::with_capacity(n);
        for rho in 0..n {
            let start = if rho == 0 || rho <= cutoff { T::one() } else { T::zero() };
            let a = start + T::idx(rho) / nf;
            let tol = T::lit(1e-15) * a.powf(-s);
            h.push(nf.powf(-s) * hurwitz_zeta(s, a, tol)?);
        }
        let total = h.iter().rev().fold(T::zero(), |acc, &x| acc + x);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let mut buf: Vec<Complex<T>> = h.iter().map(|&x| Complex::new(x, T::zero())).collect();
        fwd.process(&mut buf);
        let two = T::lit(2.0);
        let lambda = buf.iter().map(|c| (two * (total - c.re)).max(T::zero())).collect();
        let flat = hurwitz_zeta(alpha, T::idx(cutoff + 1), T::lit(1e-15))?;
        Ok(Self {
            n,
            lambda,
            flat,
            stiffness: alpha * (alpha + T::one()),
            fwd,
            inv,
        })
    }

    /// `Λ(q)` for `q = 0..N`.
    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    fn wavenumber(&self, q: usize) -> T {
        T::lit(2.0) * T::PI() * T::idx(q) / T::idx(self.n)
    }

    /// `1/(e^{ik} - 1)`
    fn inv_diff(&self, q: usize) -> Complex<T> {
        let (s, c) = self.wavenumber(q).sin_cos();
        Complex::new(c - T::one(), s).inv()
    }

    fn spectrum(&self, r: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = r.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.fwd.process(&mut buf);
        let scale = T::one() / T::idx(self.n);
        buf.iter_mut().for_each(|c| *c = *c * scale);
        buf
    }

    fn add_force(&self, r: &[T], out: &mut [T]) {
        let mut spec = self.spectrum(r);
        spec[0] = Complex::new(T::zero(), T::zero());
        for q in 1..self.n {
            spec[q] = spec[q] * self.inv_diff(q) * (-self.stiffness * self.lambda[q]);
        }
        self.inv.process(&mut spec);
        for (o, c) in out.iter_mut().zip(spec) {
            *o = *o + c.re;
        }
    }

    /// `(α(α+1)/2) Σ_j Σ_{m>M} m^{-α-2} (G_m r)_j²`
    fn energy(&self, r: &[T]) -> T {
        let spec = self.spectrum(r);
        let mut acc = spec[0].norm_sqr() * self.flat;
        for q in 1..self.n {
            acc = acc + spec[q].norm_sqr() * self.lambda[q] * self.inv_diff(q).norm_sqr();
        }
        self.stiffness * T::lit(0.5) * T::idx(self.n) * acc
    }

    /// Long-wave force multiplier acting on a continuum field `u` whose lattice
    /// displacement is `-ε^{α-1}A_ε u`: returns `iα(α+1)ε^{α-2}Λ(q)/K` for a
    /// continuum wavenumber `K` on period `Nε` (`q = K·Nε/2π mod N`).
    pub fn continuum_symbol(&self, big_k: T, epsilon: T, alpha: T) -> Complex<T> {
        if big_k == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        let turns = big_k * T::idx(self.n) * epsilon / (T::lit(2.0) * T::PI());
        let q = turns.round().as_f64() as i64;
        let q = q.rem_euclid(self.n as i64) as usize;
        Complex::new(
            T::zero(),
            self.stiffness * epsilon.powf(alpha - T::lit(2.0)) * self.lambda[q] / big_k,
        )
    }
}

/// Equivalence constants `c_lo‖η‖² ≤ Σ W ≤ c_hi‖η‖²` for the error energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnergy<T> {
    pub total: T,
    pub kinetic: T,
    pub potential: T,
    pub eta_norm_sq: T,
    pub lower_const: T,
    pub upper_const: T,
    /// Whether both `‖η‖, ‖r̃‖ ≤ 1/4` held.
    pub small: bool,
}

impl<T: Real> ErrorEnergy<T> {
    pub fn within_bounds(&self) -> bool {
        let slack = T::lit(1e-12) * self.eta_norm_sq;
        self.potential >= self.lower_const * self.eta_norm_sq - slack
            && self.potential <= self.upper_const * self.eta_norm_sq + slack
    }
}

/// `P₂ = Σ_j Σ_{m≤M} m^{-α-2}(G_m η)_j²` and the bound `‖η‖²Σ_{m>M}m^{-α}` on
/// the omitted ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2Value<T> {
    pub value: T,
    pub tail_bound: T,
}

pub fn p2_functional<T: Real>(eta: &[T], alpha: T, cutoff: usize) -> Result<P2Value<T>> {
    let n = eta.len();
    if cutoff == 0 || cutoff > n {
        return Err(Error::Argument(format!("cutoff {} outside 1..={}", cutoff, n)));
    }
    let s = prefix(eta, cutoff);
    let mut value = T::zero();
    for m in 1..=cutoff {
        let w = T::idx(m).powf(-alpha - T::lit(2.0));
        let sq = (0..n).fold(T::zero(), |acc, j| {
            let g = s[j + m] - s[j];
            acc + g * g
        });
        value = value + w * sq;
    }
    let norm_sq = eta.iter().fold(T::zero(), |a, &x| a + x * x);
    let tail_bound = norm_sq * hurwitz_zeta(alpha, T::idx(cutoff + 1), T::lit(1e-14))?;
    Ok(P2Value { value, tail_bound })
}

/// Force and energy evaluation for a fixed ring configuration.
#[derive(Debug, Clone)]
pub struct Lattice<T: Real> {
    config: LatticeConfig<T>,
    tail: Option<LinearTail<T>>,
    /// `α m^{-α-1}` and `m^{-α}` for `m = 1..=M`
    force_coef: Vec<T>,
    energy_coef: Vec<T>,
    omega_max: T,
}

impl<T: Real> Lattice<T> {
    pub fn new(config: LatticeConfig<T>) -> Result<Self> {
        config.validate()?;
        let alpha = config.alpha;
        let tail = match config.far_field {
            FarField::Truncated => None,
            FarField::LinearTail => Some(LinearTail::new(config.n, config.cutoff, alpha)?),
        };
        let force_coef = (0..=config.cutoff)
            .map(|m| if m == 0 { T::zero() } else { alpha * T::idx(m).powf(-alpha - T::one()) })
            .collect();
        let energy_coef = (0..=config.cutoff)
            .map(|m| if m == 0 { T::zero() } else { T::idx(m).powf(-alpha) })
            .collect();
        // linear frequencies ω(k)² = α(α+1)Σ_m m^{-α-2}(2-2cos km) ≤ 4α(α+1)ζ_{α+2}
        let omega_max = (T::lit(4.0) * alpha * (alpha + T::one()) * zeta(alpha + T::lit(2.0), T::lit(1e-12))?).sqrt();
        Ok(Self {
            config,
            tail,
            force_coef,
            energy_coef,
            omega_max,
        })
    }

    pub fn config(&self) -> &LatticeConfig<T> {
        &self.config
    }

    pub fn tail(&self) -> Option<&LinearTail<T>> {
        self.tail.as_ref()
    }

    fn check_len(&self, a: &[T]) -> Result<()> {
        if a.len() != self.config.n {
            return Err(Error::Argument(format!(
                "expected {} sites, got {}",
                self.config.n,
                a.len()
            )));
        }
        Ok(())
    }

    /// `ṗ` for displacement `r`: `Σ_{m≤M} δ_m^- V_m'(G_m r)` plus the far field.
    pub fn force(&self, r: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.config.n];
        self.force_into(r, &mut out)?;
        Ok(out)
    }

    pub fn force_into(&self, r: &[T], out: &mut [T]) -> Result<()> {
        self.check_len(r)?;
        let n = self.config.n;
        let alpha = self.config.alpha;
        let a1 = alpha + T::one();
        let s = prefix(r, self.config.cutoff);
        out.iter_mut().for_each(|o| *o = T::zero());
        let mut vp = vec![T::zero(); n];
        for m in 1..=self.config.cutoff {
            let mf = T::idx(m);
            let inv = T::one() / mf;
            let coef = self.force_coef[m];
            for j in 0..n {
                let g = s[j + m] - s[j];
                if !(mf + g > T::zero()) {
                    return Err(Error::Collision {
                        site: j,
                        window: m,
                        separation: (mf + g).as_f64(),
                    });
                }
                vp[j] = coef * rem1(a1, g * inv);
            }
            delta_minus_acc(&vp, m, out);
        }
        if let Some(tail) = &self.tail {
            tail.add_force(r, out);
        }
        Ok(())
    }

    /// `Σ_j Σ_m V_m(G_m r)_j` including the far field.
    pub fn potential_energy(&self, r: &[T]) -> Result<T> {
        self.check_len(r)?;
        let alpha = self.config.alpha;
        let s = prefix(r, self.config.cutoff);
        let mut acc = T::zero();
        for m in 1..=self.config.cutoff {
            let mf = T::idx(m);
            let mut part = T::zero();
            for j in 0..self.config.n {
                let g = s[j + m] - s[j];
                check_gap(mf, g, m).map_err(|_| Error::Collision {
                    site: j,
                    window: m,
                    separation: (mf + g).as_f64(),
                })?;
                part = part + rem2(alpha, g / mf);
            }
            acc = acc + self.energy_coef[m] * part;
        }
        if let Some(tail) = &self.tail {
            acc = acc + tail.energy(r);
        }
        Ok(acc)
    }

    /// `ℰ = ½Σp² + Σ_j Σ_m V_m(G_m r)_j`
    pub fn energy(&self, state: &LatticeState<T>) -> Result<T> {
        self.check_len(&state.p)?;
        let kinetic = state.p.iter().fold(T::zero(), |a, &x| a + x * x) * T::lit(0.5);
        Ok(kinetic + self.potential_energy(&state.r)?)
    }

    /// One Störmer-Verlet step of size `config.dt`.
    pub fn verlet_step(&self, state: &LatticeState<T>) -> Result<LatticeState<T>> {
        self.verlet_step_dt(state, self.config.dt)
    }

    /// Verlet step with an explicit (possibly negative) step size.
    pub fn verlet_step_dt(&self, state: &LatticeState<T>, dt: T) -> Result<LatticeState<T>> {
        let mut integ = Integrator::new(self, state.clone())?;
        integ.advance_dt(1, dt)?;
        Ok(integ.into_state())
    }

    /// Error energy `ℋ = ½Σξ² + Σ_j Σ_m W_m(G_mη, G_m r̃)_j`, requiring
    /// `‖η‖, ‖r̃‖ ≤ 1/4` in ℓ².
    pub fn error_energy(&self, xi: &[T], eta: &[T], rtilde: &[T]) -> Result<ErrorEnergy<T>> {
        let e = self.error_energy_unchecked(xi, eta, rtilde)?;
        if !e.small {
            return Err(Error::Precondition(
                "error energy needs l2 norms of eta and r-tilde at most 1/4".into(),
            ));
        }
        Ok(e)
    }

    /// [`Lattice::error_energy`] without the smallness requirement; the
    /// `small` flag records whether it held.
    pub fn error_energy_unchecked(&self, xi: &[T], eta: &[T], rtilde: &[T]) -> Result<ErrorEnergy<T>> {
        self.check_len(xi)?;
        self.check_len(eta)?;
        self.check_len(rtilde)?;
        let alpha = self.config.alpha;
        let norm_sq = |v: &[T]| v.iter().fold(T::zero(), |a, &x| a + x * x);
        let quarter = T::lit(0.25);
        let eta_sq = norm_sq(eta);
        let small = eta_sq.sqrt() <= quarter && norm_sq(rtilde).sqrt() <= quarter;
        let se = prefix(eta, self.config.cutoff);
        let sr = prefix(rtilde, self.config.cutoff);
        let mut potential = T::zero();
        for m in 1..=self.config.cutoff {
            for j in 0..self.config.n {
                let a = se[j + m] - se[j];
                let b = sr[j + m] - sr[j];
                potential = potential
                    + w_m(a, b, m, alpha).map_err(|_| Error::Collision {
                        site: j,
                        window: m,
                        separation: (T::idx(m) + a + b).as_f64(),
                    })?;
            }
        }
        if let Some(tail) = &self.tail {
            potential = potential + tail.energy(eta);
        }
        let kinetic = norm_sq(xi) * T::lit(0.5);
        let a1 = alpha * (alpha + T::one());
        let scale = T::lit(2.0).powf(alpha + T::one()) * a1;
        let zeta_a = zeta(alpha, T::lit(1e-12))?;
        let zeta_a1 = zeta(alpha + T::one(), T::lit(1e-12))?;
        Ok(ErrorEnergy {
            total: kinetic + potential,
            kinetic,
            potential,
            eta_norm_sq: eta_sq,
            lower_const: scale * (T::lit(2.0) * zeta_a1 - zeta_a) / T::lit(3.0).powf(alpha + T::lit(2.0)),
            upper_const: scale * zeta_a,
            small,
        })
    }
}

/// Verlet integration with the force carried between steps.
pub struct Integrator<'a, T: Real> {
    lattice: &'a Lattice<T>,
    state: LatticeState<T>,
    force: Vec<T>,
    t0: T,
    steps: i64,
    dt_used: Option<T>,
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(lattice: &'a Lattice<T>, state: LatticeState<T>) -> Result<Self> {
        lattice.check_len(&state.r)?;
        lattice.check_len(&state.p)?;
        let force = lattice.force(&state.r)?;
        let t0 = state.t;
        Ok(Self {
            lattice,
            state,
            force,
            t0,
            steps: 0,
            dt_used: None,
        })
    }

    pub fn state(&self) -> &LatticeState<T> {
        &self.state
    }

    pub fn into_state(self) -> LatticeState<T> {
        self.state
    }

    /// Net number of steps taken since construction.
    pub fn steps(&self) -> i64 {
        self.steps
    }

    pub fn advance(&mut self, count: usize) -> Result<()> {
        self.advance_dt(count, self.lattice.config.dt)
    }

    /// `count` steps of size `dt` (negative runs backwards). Time is kept as
    /// `t₀ + steps·dt` so checkpoints are exact multiples of the step.
    pub fn advance_dt(&mut self, count: usize, dt: T) -> Result<()> {
        if dt == T::zero() || !dt.is_finite() {
            return Err(Error::Argument("Verlet step must be nonzero".into()));
        }
        match self.dt_used {
            Some(prev) if prev.abs() != dt.abs() => {
                return Err(Error::Argument("step size changed mid-run".into()))
            }
            _ => self.dt_used = Some(dt.abs()),
        }
        if dt.abs() * self.lattice.omega_max > T::lit(2.0) {
            log::warn!(
                "Verlet step {} exceeds the linear stability limit 2/omega_max = {}",
                dt,
                T::lit(2.0) / self.lattice.omega_max
            );
        }
        let n = self.lattice.config.n;
        let half = dt * T::lit(0.5);
        let dir = if dt > T::zero() { 1 } else { -1 };
        for _ in 0..count {
            let s = &mut self.state;
            for j in 0..n {
                s.p[j] = s.p[j] + half * self.force[j];
            }
            for j in 0..n {
                let next = if j + 1 == n { s.p[0] } else { s.p[j + 1] };
                s.r[j] = s.r[j] + dt * (next - s.p[j]);
            }
            self.lattice.force_into(&s.r, &mut self.force).map_err(|e| match e {
                Error::Collision { site, window, separation } => {
                    log::error!("collision during the step from t = {}", s.t);
                    Error::Collision { site, window, separation }
                }
                other => other,
            })?;
            for j in 0..n {
                s.p[j] = s.p[j] + half * self.force[j];
            }
            self.steps += dir;
            let mag = if self.steps >= 0 {
                T::idx(self.steps as usize)
            } else {
                -T::idx((-self.steps) as usize)
            };
            s.t = self.t0 + mag * dt.abs();
            if s.r.iter().chain(&s.p).any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { time: s.t.as_f64() });
            }
            if s.r.iter().any(|v| v.abs() >= T::one()) {
                return Err(Error::Precondition(format!(
                    "relative displacement reached 1 at t = {}",
                    s.t
                )));
            }
        }
        Ok(())
    }
}

/// Stand-alone force evaluation (builds the far-field operator on every call).
pub fn force<T: Real>(r: &[T], config: &LatticeConfig<T>) -> Result<Vec<T>> {
    Lattice::new(config.clone())?.force(r)
}

/// Stand-alone energy evaluation.
pub fn energy<T: Real>(state: &LatticeState<T>, config: &LatticeConfig<T>) -> Result<T> {
    Lattice::new(config.clone())?.energy(state)
}

/// Stand-alone single Verlet step.
pub fn verlet_step<T: Real>(state: &LatticeState<T>, config: &LatticeConfig<T>) -> Result<LatticeState<T>> {
    Lattice::new(config.clone())?.verlet_step(state)
}

/// Smallest cutoff whose neglected nonlinear interactions stay below `budget`
/// in ℓ², given `D ≥ max_{j,m}|G_m r_j|` on a ring of `n` sites. Beyond `M` the
/// linearization error of `V_m'` is at most `α(α+1)(α+2)/2 · D² m^{-α-3}`
/// per term, so the ℓ² force error is below
/// `2√n · α(α+1)/2 · D² M^{-α-2}`. Capped at `n/2 - 1`.
pub fn nonlinear_tail_cutoff<T: Real>(alpha: T, n: usize, spread: T, budget: T) -> usize {
    let cap = n / 2 - 1;
    let c = T::idx(n).sqrt() * alpha * (alpha + T::one()) * spread * spread;
    for m in 1..=cap {
        if c * T::idx(m).powf(-alpha - T::lit(2.0)) <= budget {
            return m;
        }
    }
    cap
}

/// Smallest cutoff with `‖r‖ M^{1-α}/(α-1) < budget`, capped at `n/2 - 1`.
pub fn truncation_cutoff<T: Real>(alpha: T, n: usize, r_norm: T, budget: T) -> usize {
    let cap = n / 2 - 1;
    for m in 1..=cap {
        if r_norm * T::idx(m).powf(T::one() - alpha) / (alpha - T::one()) < budget {
            return m;
        }
    }
    cap
}
