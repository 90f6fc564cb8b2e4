//! One-dimensional adaptive quadrature (Gauss–Kronrod 7/15) and bracketing
//! root finding.
//!
//! The integrator keeps a list of panels and bisects the panel with the
//! largest error estimate until the summed estimate meets
//! `max(abs_tol, rel_tol * |I|)`. The per-panel estimate is `|K15 - G7|`,
//! which is pessimistic for smooth integrands.

use crate::error::{Error, Result};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default panel budget for [`integrate`].
pub const MAX_PANELS: usize = 4000;

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Panel { a, b, value, error }
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], abs_tol, rel_tol)
}

/// Like [`integrate`] but seeds the panel list with the given break points,
/// which must be increasing. Useful when the integrand has a known kink or
/// near-singularity inside the range.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    if breaks.len() < 2 {
        return Err(Error::numeric("quadrature needs at least two break points"));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::numeric("quadrature break points must be increasing"));
    }
    let mut panels: Vec<Panel> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();
    let mut evals = 15 * panels.len();
    if panels.is_empty() {
        return Ok(Integral { value: 0.0, error: 0.0, evals: 0 });
    }
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::numeric("quadrature produced a non-finite value"));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, error, evals });
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::numeric(format!(
                "quadrature did not converge: estimate {value:e}, error {error:e} after {evals} evaluations"
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::numeric("quadrature panel collapsed below machine resolution"));
        }
        panels.push(kronrod(&mut f, p.a, mid));
        panels.push(kronrod(&mut f, mid, p.b));
        evals += 30;
    }
}

/// Find a root of `f` on `[lo, hi]` by bisection. The endpoint values must
/// bracket a sign change; iteration stops once the bracket is narrower than
/// `x_tol`.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::numeric(format!(
            "root not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric(format!(
        "bisection did not converge in {max_iter} iterations; bracket [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 0.0).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
        assert_eq!(r.evals, 15);
    }

    #[test]
    fn inverse_sqrt_endpoint() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn gaussian_with_breaks() {
        let r = integrate_with_breaks(
            |x: f64| (-x * x).exp(),
            &[-30.0, -1.0, 1.0, 30.0],
            1e-13,
            1e-13,
        )
        .unwrap();
        assert!((r.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let x = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| Ok(x * x + 1.0), 0.0, 2.0, 1e-14, 200).is_err());
    }
}
