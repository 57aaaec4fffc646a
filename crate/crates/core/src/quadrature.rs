//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};
use crate::real::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel. Returns `(estimate, error estimate)`.
pub fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * pair;
        // odd Kronrod nodes coincide with the 7-point Gauss nodes
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    let est = kronrod * radius;
    let err = ((kronrod - gauss) * radius).abs();
    (est, err)
}

/// Globally adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error estimate drops below `tol`, or `max_panels` is reached.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T, max_panels: usize) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::Argument("quadrature tolerance must be positive".into()));
    }
    if a == b {
        return Ok(T::zero());
    }
    let mut panels = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total_err = panels.iter().fold(T::zero(), |acc, p| acc + p.3);
        if total_err <= tol {
            break;
        }
        if panels.len() >= max_panels {
            let est = panels.iter().fold(T::zero(), |acc, p| acc + p.2);
            // roundoff floor: nothing left to gain by splitting
            if total_err <= T::epsilon() * T::lit(1e3) * est.abs().max(T::one()) {
                break;
            }
            return Err(Error::Internal(format!(
                "adaptive quadrature did not converge: error {} > {}",
                total_err, tol
            )));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = T::lit(0.5) * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    Ok(panels.iter().fold(T::zero(), |acc, p| acc + p.2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x: f64| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-13, 10).unwrap();
        assert_abs_diff_eq!(v, 64.0 / 6.0 - 8.0, epsilon = 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ x^{-1/2} dx = 2
        let v = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10, 2000).unwrap();
        assert_abs_diff_eq!(v, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn oscillatory() {
        let v = integrate(|x: f64| x.cos(), 0.0, 20.0, 1e-12, 200).unwrap();
        assert_abs_diff_eq!(v, 20f64.sin(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(integrate(|x: f64| x, 0.0, 1.0, 0.0, 10).is_err());
    }
}
