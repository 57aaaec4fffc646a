//! Zeta sums, the dispersion integral η_α and every α-dependent constant of
//! the long-wave limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::real::Real;

/// Default absolute tolerance for scalar routines.
pub const DEFAULT_TOL: f64 = 1e-10;

/// B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Euler-Maclaurin tail `Σ_{k≥0} (x+k)^{-s}` for `x` large enough.
///
/// Returns `(value, size of the last correction used)`.
fn em_tail<T: Real>(s: T, x: T, tol: T) -> (T, T) {
    let mut sum = x.powf(T::one() - s) / (s - T::one()) + T::lit(0.5) * x.powf(-s);
    // running factor (s)_{2j-1} x^{-s-2j+1} / (2j)!
    let mut factor = s * x.powf(-s - T::one()) / T::lit(2.0);
    let mut last = T::infinity();
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = T::lit(*b) * factor;
        sum = sum + term;
        last = term.abs();
        if last < tol {
            break;
        }
        let two_j = T::idx(2 * (j + 1));
        factor = factor * (s + two_j - T::one()) * (s + two_j) / (x * x)
            / ((two_j + T::one()) * (two_j + T::lit(2.0)));
    }
    (sum, last)
}

/// Hurwitz zeta `Σ_{k≥0} (a+k)^{-s}` for `s > 1`, `a > 0`.
pub fn hurwitz_zeta<T: Real>(s: T, a: T, tol: T) -> Result<T> {
    if !(s > T::one()) {
        return Err(Error::Domain(format!("hurwitz zeta needs s > 1, got {}", s)));
    }
    if !(a > T::zero()) {
        return Err(Error::Domain(format!("hurwitz zeta needs a > 0, got {}", a)));
    }
    if !(tol > T::zero()) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let mut head = 20usize;
    loop {
        let x = a + T::idx(head);
        let (tail, last) = em_tail(s, x, tol * T::lit(0.25));
        if last < tol * T::lit(0.25) || head > 1 << 20 {
            // sum the small terms first
            let partial = (0..head)
                .rev()
                .fold(T::zero(), |acc, k| acc + (a + T::idx(k)).powf(-s));
            return Ok(partial + tail);
        }
        head *= 2;
    }
}

/// Riemann zeta `ζ_s = Σ_{m≥1} m^{-s}` for real `s > 1`, absolute error below `tol`.
///
/// Partial sum to `M ≥ 20` followed by the Euler-Maclaurin correction
/// `M^{1-s}/(s-1) + M^{-s}/2 + Σ_j B_{2j} (s)_{2j-1} M^{-s-2j+1}/(2j)!`,
/// with `M` grown until the last correction is below `tol`.
pub fn zeta<T: Real>(s: T, tol: T) -> Result<T> {
    if !(s > T::one()) {
        return Err(Error::Domain(format!("zeta sum diverges for s = {} <= 1", s)));
    }
    if !(tol > T::zero()) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    hurwitz_zeta(s, T::one(), tol)
}

/// `1 - sinc²(s/2)` with a power series near zero.
pub fn one_minus_sinc2_half<T: Real>(s: T) -> T {
    if s.abs() < T::lit(0.5) {
        // Σ_{n≥2} (-1)^n 2 s^{2n-2} / (2n)!
        let s2 = s * s;
        let mut term = T::lit(2.0) * s2 / T::lit(24.0); // n = 2
        let mut sum = term;
        for n in 3..12usize {
            let two_n = T::idx(2 * n);
            term = -term * s2 / ((two_n - T::one()) * two_n);
            sum = sum + term;
        }
        sum
    } else {
        let x = T::lit(0.5) * s;
        let sinc = x.sin() / x;
        T::one() - sinc * sinc
    }
}

/// `1 - s²/12 - sinc²(s/2)`: the regular part of the numerator of `g_α`.
fn desingularized_numerator<T: Real>(s: T) -> T {
    if s.abs() < T::one() {
        // Σ_{n≥3} (-1)^n 2 s^{2n-2} / (2n)!
        let s2 = s * s;
        let mut term = -T::lit(2.0) * s2 * s2 / T::lit(720.0);
        let mut sum = term;
        for n in 4..14usize {
            let two_n = T::idx(2 * n);
            term = -term * s2 / ((two_n - T::one()) * two_n);
            sum = sum + term;
        }
        sum
    } else {
        let x = T::lit(0.5) * s;
        let sinc = x.sin() / x;
        T::one() - s * s / T::lit(12.0) - sinc * sinc
    }
}

/// Integrand `f_α(s) = (1 - sinc²(s/2)) / s^α`.
pub fn eta_integrand<T: Real>(alpha: T, s: T) -> T {
    one_minus_sinc2_half(s) / s.powf(alpha)
}

/// `g_α(s) = (1 - s²/12 - sinc²(s/2)) / s^α`, bounded on `[0, 2]` for α < 3.
pub fn eta_desingularized<T: Real>(alpha: T, s: T) -> T {
    if s == T::zero() {
        return T::zero();
    }
    desingularized_numerator(s) / s.powf(alpha)
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::one() && alpha < T::lit(3.0) {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha must lie in (1, 3), got {}", alpha)))
    }
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if tol > T::zero() {
        Ok(())
    } else {
        Err(Error::Argument("tolerance must be positive".into()))
    }
}

/// `η_α = ∫₀^∞ (1 - sinc²(s/2)) / s^α ds`, split at `s = 2`.
pub fn eta_integral<T: Real>(alpha: T, tol: T) -> Result<T> {
    eta_integral_with_split(alpha, tol, T::lit(2.0))
}

/// [`eta_integral`] with an explicit split point between the desingularized
/// head and the oscillatory body.
pub fn eta_integral_with_split<T: Real>(alpha: T, tol: T, split: T) -> Result<T> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if !(split > T::zero()) {
        return Err(Error::Argument("split point must be positive".into()));
    }
    let three = T::lit(3.0);
    let quarter_tol = tol * T::lit(0.25);

    // head: ∫₀^split g_α + ∫₀^split s^{2-α}/12
    let g = |s: T| eta_desingularized(alpha, s);
    let head = quadrature::integrate(g, T::zero(), split, quarter_tol, 4000)?
        + split.powf(three - alpha) / (T::lit(12.0) * (three - alpha));

    // tail from S: s^{-α} - 2 s^{-α-2} + 2 cos(s) s^{-α-2}; the cosine part
    // is -2 sin(S) S^{-α-2} up to 4 (α+2) S^{-α-3}
    let two = T::lit(2.0);
    let p = alpha + two;
    let s_end = (T::lit(16.0) * p / tol)
        .powf(T::one() / (alpha + three))
        .max(split + T::PI());
    let tail = s_end.powf(T::one() - alpha) / (alpha - T::one())
        - two * s_end.powf(-alpha - T::one()) / (alpha + T::one())
        - two * s_end.sin() * s_end.powf(-p);

    // body: panels of width π between split and S
    let f = |s: T| eta_integrand(alpha, s);
    let panels = ((s_end - split) / T::PI()).ceil().as_f64().max(1.0) as usize;
    let width = (s_end - split) / T::idx(panels);
    let panel_tol = quarter_tol / T::idx(panels);
    let mut body = T::zero();
    for i in 0..panels {
        let lo = split + width * T::idx(i);
        let hi = if i + 1 == panels { s_end } else { lo + width };
        body = body + quadrature::integrate(f, lo, hi, panel_tol, 200)?;
    }
    Ok(head + body + tail)
}

/// Right-endpoint Riemann sum `η_α(h) = h Σ_{m≥1} (1 - sinc²(hm/2)) / (hm)^α`.
///
/// Terms past `m*` are summed in closed form through Hurwitz zeta values;
/// only the oscillating `cos(hm)` remainder is dropped, and `m*` is chosen so
/// that its bound is below `tol / 2`.
pub fn eta_riemann<T: Real>(alpha: T, h: T, tol: T) -> Result<T> {
    check_alpha(alpha)?;
    check_tol(tol)?;
    if !(h > T::zero()) {
        return Err(Error::Argument(format!("step h must be positive, got {}", h)));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let p = alpha + two;
    let half_sin = (T::lit(0.5) * h).sin().abs();
    let scale = two * h.powf(-one - alpha);
    let bound = |m: usize| -> T {
        let mm = T::idx(m);
        let abel = if half_sin > T::zero() {
            (mm + one).powf(-p) / half_sin
        } else {
            T::infinity()
        };
        let crude = mm.powf(one - p) / (p - one);
        scale * abel.min(crude)
    };
    let mut m_star = 16usize;
    while bound(m_star) >= T::lit(0.5) * tol {
        if m_star > 100_000_000 {
            return Err(Error::Internal(format!(
                "eta_riemann: cannot reach tolerance {} at h = {}",
                tol, h
            )));
        }
        m_star *= 2;
    }
    // bisect down to the smallest admissible m*
    let (mut lo, mut hi) = (m_star / 2, m_star);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if bound(mid) < T::lit(0.5) * tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let m_star = hi.max(1);

    let head = (1..=m_star)
        .rev()
        .fold(T::zero(), |acc, m| acc + eta_integrand(alpha, h * T::idx(m)));
    let start = T::idx(m_star + 1);
    let ztol = tol * T::lit(1e-3) * h.powf(alpha + two).min(one);
    let tail = h.powf(-alpha) * hurwitz_zeta(alpha, start, ztol)?
        - two * h.powf(-p) * hurwitz_zeta(p, start, ztol)?;
    Ok(h * (head + tail))
}

/// `2 ζ_{α+1} - ζ_α`; positive exactly when the norm-equivalence argument closes.
pub fn zeta_gap<T: Real>(alpha: T) -> Result<T> {
    zeta_gap_with_tol(alpha, T::lit(1e-13).max(T::epsilon() * T::lit(16.0)))
}

pub fn zeta_gap_with_tol<T: Real>(alpha: T, zeta_tol: T) -> Result<T> {
    if !(alpha > T::one()) {
        return Err(Error::Domain(format!("zeta gap needs alpha > 1, got {}", alpha)));
    }
    Ok(T::lit(2.0) * zeta(alpha + T::one(), zeta_tol)? - zeta(alpha, zeta_tol)?)
}

/// Root α* of [`zeta_gap`] by bisection on `[1.3, 1.6]`.
pub fn find_alpha_star<T: Real>(tol: T) -> Result<T> {
    find_alpha_star_in(T::lit(1.3), T::lit(1.6), tol, T::lit(1e-13).max(T::epsilon() * T::lit(16.0)))
}

/// Bisection for α* on a caller-supplied bracket with explicit zeta tolerance.
pub fn find_alpha_star_in<T: Real>(lo: T, hi: T, tol: T, zeta_tol: T) -> Result<T> {
    check_tol(tol)?;
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = zeta_gap_with_tol(lo, zeta_tol)?;
    let f_hi = zeta_gap_with_tol(hi, zeta_tol)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Internal(format!(
            "zeta gap has no sign change on [{}, {}]",
            lo, hi
        )));
    }
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = zeta_gap_with_tol(mid, zeta_tol)?;
        if f_mid == T::zero() {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// Error exponent: `2α - 5/2` on `(1, 2]`, `3/2` on `(2, 3)`.
pub fn error_exponent<T: Real>(alpha: T) -> T {
    if alpha <= T::lit(2.0) {
        T::lit(2.0) * alpha - T::lit(2.5)
    } else {
        T::lit(1.5)
    }
}

/// Residual exponent: `3α - 5/2` on `(1, 2]`, `α + 3/2` on `(2, 3)`.
pub fn residual_exponent<T: Real>(alpha: T) -> T {
    if alpha <= T::lit(2.0) {
        T::lit(3.0) * alpha - T::lit(2.5)
    } else {
        alpha + T::lit(1.5)
    }
}

/// Every α-dependent scalar of the long-wave limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams<T> {
    pub alpha: T,
    /// ζ_α
    pub zeta_a: T,
    /// ζ_{α+1}
    pub zeta_a1: T,
    /// wave speed `c_α = sqrt(α(α+1)ζ_α)`
    pub c: T,
    /// `κ₁ = 2c_α`
    pub kappa1: T,
    /// `κ₂ = α(α+1)(α+2)ζ_α`
    pub kappa2: T,
    /// `κ₃ = α(α+1)η_α`
    pub kappa3: T,
    /// η_α
    pub eta: T,
    /// error exponent γ_α
    pub gamma: T,
    /// residual exponent β_α
    pub beta: T,
}

impl<T: Real> AlphaParams<T> {
    pub fn new(alpha: T, tol: T) -> Result<Self> {
        check_alpha(alpha)?;
        check_tol(tol)?;
        let one = T::one();
        let zeta_a = zeta(alpha, tol)?;
        let zeta_a1 = zeta(alpha + one, tol)?;
        let eta = eta_integral(alpha, tol)?;
        let a1 = alpha * (alpha + one);
        let c = (a1 * zeta_a).sqrt();
        Ok(Self {
            alpha,
            zeta_a,
            zeta_a1,
            c,
            kappa1: T::lit(2.0) * c,
            kappa2: a1 * (alpha + T::lit(2.0)) * zeta_a,
            kappa3: a1 * eta,
            eta,
            gamma: error_exponent(alpha),
            beta: residual_exponent(alpha),
        })
    }

    /// `α(α+1)`, the curvature `m^{α+2} V_m''(0)` shared by all pair potentials.
    pub fn stiffness(&self) -> T {
        self.alpha * (self.alpha + T::one())
    }

    /// `2ζ_{α+1} - ζ_α`
    pub fn zeta_gap(&self) -> T {
        T::lit(2.0) * self.zeta_a1 - self.zeta_a
    }
}

/// Shorthand for [`AlphaParams::new`].
pub fn make_alpha_params<T: Real>(alpha: T, tol: T) -> Result<AlphaParams<T>> {
    AlphaParams::new(alpha, tol)
}
