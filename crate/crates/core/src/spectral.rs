//! Real periodic fields on uniform grids and their Fourier multipliers.
//!
//! Coefficients follow `f(X) = Σ_j c_j e^{i k_j X}` with
//! `c_j = n⁻¹ Σ_i f(X_i) e^{-i k_j X_i}`, stored in FFT order: slot `j < n/2`
//! holds wavenumber `2πj/P`, slot `j ≥ n/2` holds `2π(j-n)/P`. Slot `n/2` is
//! the unpaired mode `k = -πn/P`.

use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform grid `X_i = iP/n` on one period, with cached FFT plans.
#[derive(Clone)]
pub struct PeriodicGrid<T: Real> {
    period: T,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for PeriodicGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("period", &self.period)
            .field("n", &self.n)
            .finish()
    }
}

impl<T: Real> PartialEq for PeriodicGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.period == other.period
    }
}

impl<T: Real> PeriodicGrid<T> {
    /// `n` must be a power of two, at least 8.
    pub fn new(period: T, n: usize) -> Result<Self> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::Argument(format!("period must be positive, got {}", period)));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Argument(format!(
                "grid size must be a power of two >= 8, got {}",
                n
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            period,
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> T {
        self.period / T::idx(self.n)
    }

    pub fn node(&self, i: usize) -> T {
        T::idx(i) * self.dx()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Signed mode number of FFT slot `j`, in `-n/2 ..= n/2 - 1`.
    pub fn mode(&self, j: usize) -> isize {
        if j < self.n / 2 {
            j as isize
        } else {
            j as isize - self.n as isize
        }
    }

    /// Wavenumber `2π mode(j) / P` of FFT slot `j`.
    pub fn wavenumber(&self, j: usize) -> T {
        let m = self.mode(j);
        let k = T::lit(2.0) * T::PI() * T::idx(m.unsigned_abs()) / self.period;
        if m < 0 {
            -k
        } else {
            k
        }
    }

    pub fn wavenumbers(&self) -> Vec<T> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Largest resolved |k|.
    pub fn k_max(&self) -> T {
        T::PI() * T::idx(self.n) / self.period
    }

    pub(crate) fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fwd.process(&mut buf);
        let scale = T::one() / T::idx(self.n);
        buf.iter_mut().for_each(|c| *c = *c * scale);
        buf
    }

    pub(crate) fn inverse(&self, spectrum: &[Complex<T>]) -> Vec<T> {
        let mut buf = spectrum.to_vec();
        self.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// A real periodic function sampled on a [`PeriodicGrid`] together with its
/// discrete spectrum. Both representations are kept in sync; every operation
/// returns a new field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T: Real> {
    grid: PeriodicGrid<T>,
    values: Vec<T>,
    spectrum: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn from_values(grid: &PeriodicGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Argument(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        let spectrum = grid.forward(&values);
        Ok(Self {
            grid: grid.clone(),
            values,
            spectrum,
        })
    }

    pub fn from_fn<F: Fn(T) -> T>(grid: &PeriodicGrid<T>, f: F) -> Self {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::from_values(grid, values).expect("length matches grid")
    }

    pub fn zeros(grid: &PeriodicGrid<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![T::zero(); grid.n()],
            spectrum: vec![Complex::new(T::zero(), T::zero()); grid.n()],
        }
    }

    /// Builds the real field whose coefficients are (the Hermitian part of) `spectrum`.
    pub fn from_spectrum(grid: &PeriodicGrid<T>, spectrum: Vec<Complex<T>>) -> Result<Self> {
        if spectrum.len() != grid.n() {
            return Err(Error::Argument(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                spectrum.len()
            )));
        }
        let values = grid.inverse(&spectrum);
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &PeriodicGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.spectrum
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn mean(&self) -> T {
        self.spectrum[0].re
    }

    /// Multiplies coefficient `j` by `m(k_j)` without checking symmetry.
    fn map_multiplier<F: Fn(T) -> Complex<T>>(&self, m: F) -> Self {
        let n = self.grid.n();
        let half = n / 2;
        let spectrum: Vec<Complex<T>> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mk = m(self.grid.wavenumber(j));
                if j == half && mk.im != T::zero() {
                    Complex::new(T::zero(), T::zero())
                } else {
                    *c * mk
                }
            })
            .collect();
        let values = self.grid.inverse(&spectrum);
        // re-derive so the spectrum is exactly the transform of the stored samples
        Self::from_values(&self.grid, values).expect("length matches grid")
    }

    /// Applies a Fourier multiplier `m(k)`. The multiplier must satisfy
    /// `m(-k) = conj(m(k))` on the grid so that the output stays real; the
    /// unpaired `-n/2` mode is dropped when `m` is not real there.
    pub fn apply_multiplier<F: Fn(T) -> Complex<T>>(&self, m: F) -> Result<Self> {
        let tol = T::epsilon() * T::lit(64.0);
        for j in 1..self.grid.n() / 2 {
            let k = self.grid.wavenumber(j);
            let a = m(k);
            let b = m(-k);
            let scale = T::one() + a.norm();
            if (a.conj() - b).norm() > tol * scale {
                return Err(Error::Contract(format!(
                    "multiplier is not conjugate-symmetric at k = {}",
                    k
                )));
            }
        }
        let m0 = m(T::zero());
        if m0.im.abs() > tol * (T::one() + m0.norm()) {
            return Err(Error::Contract("multiplier is not real at k = 0".into()));
        }
        Ok(self.map_multiplier(m))
    }

    /// Hilbert transform, multiplier `-i sgn(k)` with `sgn(0) = 0`.
    pub fn hilbert(&self) -> Self {
        self.map_multiplier(|k| Complex::new(T::zero(), -sgn(k)))
    }

    /// `|D|^α`, multiplier `|k|^α` (with `|0|^0 = 1`).
    pub fn frac_deriv(&self, alpha: T) -> Self {
        self.map_multiplier(|k| Complex::new(k.abs().powf(alpha), T::zero()))
    }

    /// `H|D|^α`, multiplier `-i sgn(k)|k|^α`.
    pub fn hilbert_frac(&self, alpha: T) -> Self {
        self.map_multiplier(|k| Complex::new(T::zero(), -sgn(k) * k.abs().powf(alpha)))
    }

    /// `∂_X`, multiplier `ik`.
    pub fn derivative(&self) -> Self {
        self.map_multiplier(|k| Complex::new(T::zero(), k))
    }

    /// Sliding average `A_h f(X) = h⁻¹ ∫₀^h f(X+z) dz`, multiplier `(e^{ikh}-1)/(ikh)`.
    pub fn average_op(&self, h: T) -> Result<Self> {
        if h == T::zero() || !h.is_finite() {
            return Err(Error::Argument("averaging width must be nonzero".into()));
        }
        Ok(self.map_multiplier(|k| average_symbol(k * h)))
    }

    /// `v(X) = -∫₀^X f`, the periodic antiderivative with `v(0) = 0`.
    pub fn antiderivative_meanzero(&self) -> Result<Self> {
        let scale = self
            .values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()));
        let allowed = T::lit(1e-10).max(T::epsilon() * T::lit(256.0) * scale);
        if self.mean().abs() > allowed {
            return Err(Error::Precondition(format!(
                "antiderivative needs a mean-zero field, mean = {}",
                self.mean()
            )));
        }
        let n = self.grid.n();
        let half = n / 2;
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); n];
        for j in 1..n {
            if j == half {
                continue;
            }
            let k = self.grid.wavenumber(j);
            // -c / (ik) = i c / k
            spectrum[j] = Complex::new(T::zero(), T::one() / k) * self.spectrum[j];
        }
        let at_zero = spectrum.iter().fold(Complex::new(T::zero(), T::zero()), |a, c| a + *c);
        spectrum[0] = Complex::new(-at_zero.re, T::zero());
        Self::from_spectrum(&self.grid, spectrum)
    }

    /// Trigonometric interpolant evaluated at an arbitrary point.
    pub fn eval_at(&self, x: T) -> T {
        let n = self.grid.n();
        let half = n / 2;
        let mut acc = self.spectrum[0].re;
        let two = T::lit(2.0);
        for j in 1..half {
            let (s, c) = (self.grid.wavenumber(j) * x).sin_cos();
            let z = self.spectrum[j];
            acc = acc + two * (z.re * c - z.im * s);
        }
        acc + self.spectrum[half].re * (self.grid.wavenumber(half) * x).cos()
    }

    /// Samples the interpolant at `x0 + i P / count` for `i = 0..count`.
    ///
    /// Exact for any `count`: modes are phase-shifted and folded onto the
    /// coarser (or zero-padded onto the finer) index set before one inverse FFT.
    pub fn sample_shifted(&self, x0: T, count: usize) -> Vec<T> {
        if count == 0 {
            return Vec::new();
        }
        let n = self.grid.n();
        let half = n / 2;
        let mut bins = vec![Complex::new(T::zero(), T::zero()); count];
        let mut deposit = |mode: isize, c: Complex<T>| {
            let k = T::lit(2.0) * T::PI() * T::idx(mode.unsigned_abs()) / self.grid.period();
            let k = if mode < 0 { -k } else { k };
            let (s, co) = (k * x0).sin_cos();
            let slot = mode.rem_euclid(count as isize) as usize;
            bins[slot] = bins[slot] + c * Complex::new(co, s);
        };
        for j in 0..n {
            if j == half {
                let c = self.spectrum[j] * T::lit(0.5);
                deposit(half as isize, c);
                deposit(-(half as isize), c);
            } else {
                deposit(self.grid.mode(j), self.spectrum[j]);
            }
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(count).process(&mut bins);
        bins.into_iter().map(|c| c.re).collect()
    }

    /// Discrete `H^s` norm `sqrt(P Σ_j (1+k_j²)^s |c_j|²)`; `s = 0` is the
    /// continuum L² norm of the interpolant.
    pub fn sobolev_norm(&self, s: T) -> T {
        let sum = self
            .spectrum
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (j, c)| {
                let k = self.grid.wavenumber(j);
                acc + (T::one() + k * k).powf(s) * c.norm_sqr()
            });
        (self.grid.period() * sum).sqrt()
    }

    pub fn l2_norm(&self) -> T {
        self.sobolev_norm(T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Keeps modes with `|mode| <= fraction · n/2`; the rest are zeroed.
    pub fn truncated(&self, fraction: T) -> Self {
        let cutoff = (fraction * T::idx(self.grid.n() / 2)).floor().as_f64() as usize;
        let spectrum = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if self.grid.mode(j).unsigned_abs() <= cutoff {
                    *c
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            })
            .collect();
        Self::from_spectrum(&self.grid, spectrum).expect("length matches grid")
    }

    fn zip_values<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Argument("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values(&self.grid, values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_values(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_values(other, |a, b| a - b)
    }

    /// Pointwise product in physical space (no dealiasing).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_values(other, |a, b| a * b)
    }

    /// `a·self + b·other`
    pub fn axpby(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.zip_values(other, |x, y| a * x + b * y)
    }

    pub fn scale(&self, a: T) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| a * v).collect(),
            spectrum: self.spectrum.iter().map(|&c| c * a).collect(),
        }
    }

    /// `X,value` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "X,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.node(i).as_f64(), v.as_f64())?;
        }
        Ok(())
    }

    /// Binary dump: little-endian `f64` words `P, n, values[0..n]`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.grid.period().as_f64().to_le_bytes())?;
        w.write_all(&(self.grid.n() as f64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut word)?;
            Ok(f64::from_le_bytes(word))
        };
        let period = next(&mut r)?;
        let n = next(&mut r)?;
        if n.fract() != 0.0 || n < 0.0 {
            return Err(Error::Argument(format!("corrupt header: n = {}", n)));
        }
        let n = n as usize;
        let grid = PeriodicGrid::new(T::lit(period), n)?;
        let values = (0..n).map(|_| next(&mut r).map(T::lit)).collect::<Result<Vec<_>>>()?;
        Self::from_values(&grid, values)
    }
}

fn sgn<T: Real>(k: T) -> T {
    if k > T::zero() {
        T::one()
    } else if k < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `(e^{iθ} - 1)/(iθ) = sinc θ + i (1 - cos θ)/θ`, equal to 1 at θ = 0.
pub fn average_symbol<T: Real>(theta: T) -> Complex<T> {
    if theta == T::zero() {
        return Complex::new(T::one(), T::zero());
    }
    let half = T::lit(0.5) * theta;
    let sh = half.sin();
    Complex::new(theta.sin() / theta, T::lit(2.0) * sh * sh / theta)
}

/// `sinc x = sin(x)/x`, `sinc 0 = 1`.
pub fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        x.sin() / x
    }
}
