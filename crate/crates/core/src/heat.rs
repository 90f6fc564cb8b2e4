//! Heat kernels, Green functions and Martin kernels of H^d(-a^2) for
//! d in {2, 3}, together with the constants of the constant-curvature models.
//!
//! Every quantity is computed for `a = 1` and mapped to general `a` through
//! the scaling law `p_a(t, r) = a^d p_1(a^2 t, a r)`, which for the Green
//! function becomes `G_a(r) = a^{d-2} G_1(a r)`.
//!
//! Kernels are available both directly and as logarithms; the log forms stay
//! finite where the kernel itself underflows (large `r` or `t`).

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{busemann, BoundaryPoint, HPoint};
use crate::models::{ln_sinh, ModelSpec, SpaceForm};
use crate::quad;

// Relative tolerance of the McKean integral. Tight enough that
// fourth-order finite differences of the kernel stay meaningful.
const MCKEAN_REL_TOL: f64 = 1e-13;

fn check_supported(sf: SpaceForm) -> Result<()> {
    if sf.dim != 2 && sf.dim != 3 {
        return Err(Error::Unsupported(format!(
            "closed-form kernels exist for d = 2 and 3 only, got d = {}",
            sf.dim
        )));
    }
    Ok(())
}

/// `ln(r / sinh r)`, 0 at the pole.
fn ln_r_over_sinh(r: f64) -> f64 {
    if r < 1e-4 {
        -r * r / 6.0
    } else {
        r.ln() - ln_sinh(r)
    }
}

/// Log of the McKean integral at `a = 1` without the prefactor
/// `sqrt(2) (4 pi t)^{-3/2} e^{-t/4}`.
fn ln_mckean_integral(t: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        // cosh s - 1 = 2 sinh^2(s/2)
        let s_max = -t + (t * t + 240.0 * t).sqrt();
        let g = |s: f64| {
            if s == 0.0 {
                std::f64::consts::SQRT_2
            } else {
                s * (-s * s / (4.0 * t)).exp() / (std::f64::consts::SQRT_2 * (0.5 * s).sinh())
            }
        };
        let mut breaks = vec![0.0, s_max];
        let knee = (2.0 * t.sqrt()).min(0.5 * s_max);
        breaks.insert(1, knee);
        return Ok(quad::integrate_with_breaks(g, &breaks, 0.0, MCKEAN_REL_TOL)?.value.ln());
    }
    // s = r + u^2 removes the inverse square-root singularity at s = r; the
    // factor e^{-r^2/4t - r/2} is pulled out so the integrand is O(1).
    let g = |u: f64| {
        let w = u * u;
        if w == 0.0 {
            // limit of 2u / sqrt(sinh(u^2/2)) is 2 sqrt(2)
            return 2.0 * std::f64::consts::SQRT_2 * r / (-(-2.0 * r).exp_m1()).sqrt();
        }
        let s = r + w;
        let gauss = (-(w * (2.0 * r + w)) / (4.0 * t) - 0.25 * w).exp();
        let denom = (-(-(2.0 * r + w)).exp_m1() * (0.5 * w).sinh()).sqrt();
        2.0 * u * s * gauss / denom
    };
    let b = 2.0 * r + 2.0 * t;
    let w_max = 0.5 * (-b + (b * b + 960.0 * t).sqrt());
    let u_max = w_max.sqrt();
    let mut breaks = vec![0.0];
    for cand in [r.sqrt(), 10.0 * r.sqrt(), 1.0] {
        if cand > *breaks.last().unwrap() && cand < u_max {
            breaks.push(cand);
        }
    }
    breaks.push(u_max);
    let j = quad::integrate_with_breaks(g, &breaks, 0.0, MCKEAN_REL_TOL)?.value;
    Ok(-r * r / (4.0 * t) - 0.5 * r + j.ln())
}

fn ln_heat_unit(dim: usize, t: f64, r: f64) -> Result<f64> {
    match dim {
        3 => Ok(-1.5 * (4.0 * PI * t).ln() + ln_r_over_sinh(r) - t - r * r / (4.0 * t)),
        2 => Ok(0.5 * LN_2 - 1.5 * (4.0 * PI * t).ln() - 0.25 * t + ln_mckean_integral(t, r)?),
        _ => unreachable!("checked by caller"),
    }
}

/// `ln p(t, r)` for the heat kernel of `d/dt = Delta`.
pub fn log_heat_kernel(sf: SpaceForm, t: f64, r: f64) -> Result<f64> {
    check_supported(sf)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("heat kernel needs t > 0, got {t}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain(format!("heat kernel needs r >= 0, got {r}")));
    }
    let a = sf.a;
    Ok(sf.dim as f64 * a.ln() + ln_heat_unit(sf.dim, a * a * t, a * r)?)
}

/// Heat kernel `p(t, r)` as a function of the distance `r` between the points.
pub fn heat_kernel(sf: SpaceForm, t: f64, r: f64) -> Result<f64> {
    Ok(log_heat_kernel(sf, t, r)?.exp())
}

/// Area of the unit sphere S^{d-1}.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(0.5 * n) / statrs::function::gamma::gamma(0.5 * n)
}

/// `ln` of the law of `d(x, omega_t)`: `p(t, r) |S^{d-1}| A(r)`.
pub fn log_radial_density(sf: SpaceForm, t: f64, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let m = ModelSpec::ConstantCurvature(sf);
    Ok(log_heat_kernel(sf, t, r)? + sphere_area(sf.dim).ln() + m.log_volume_density(r)?)
}

pub fn radial_density(sf: SpaceForm, t: f64, r: f64) -> Result<f64> {
    Ok(log_radial_density(sf, t, r)?.exp())
}

/// Radius beyond which the radial law carries negligible mass.
fn radial_upper(sf: SpaceForm, t: f64) -> f64 {
    sf.growth() * t + 14.0 * (2.0 * t).sqrt() + 12.0 / sf.a
}

/// Total mass of the radial law, `int_0^inf p(t,r) |S^{d-1}| A(r) dr`.
pub fn radial_mass(sf: SpaceForm, t: f64) -> Result<f64> {
    let hi = radial_upper(sf, t);
    let peak = sf.growth() * t + (2.0 * t).sqrt();
    let sd = (2.0 * t).sqrt();
    let mut breaks: Vec<f64> = vec![0.0];
    for k in -6..=6 {
        let b = peak + k as f64 * sd;
        if b > *breaks.last().unwrap() && b < hi {
            breaks.push(b);
        }
    }
    breaks.push(hi);
    let mut err = None;
    let v = quad::integrate_with_breaks(
        |r| match radial_density(sf, t, r) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        &breaks,
        1e-12,
        1e-10,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(v?.value)
}

/// Tabulated cumulative distribution of `d(x, omega_t)`, used as the oracle
/// in Kolmogorov-Smirnov tests.
#[derive(Debug, Clone)]
pub struct RadialLaw {
    r: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    mass: f64,
}

impl RadialLaw {
    pub fn new(sf: SpaceForm, t: f64) -> Result<Self> {
        Self::with_nodes(sf, t, 600)
    }

    pub fn with_nodes(sf: SpaceForm, t: f64, n: usize) -> Result<Self> {
        check_supported(sf)?;
        let hi = radial_upper(sf, t);
        let h = hi / n as f64;
        let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let pdf = r.iter().map(|&x| radial_density(sf, t, x)).collect::<Result<Vec<_>>>()?;
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in r.windows(2) {
            let mut err = None;
            let piece = quad::integrate(
                |x| match radial_density(sf, t, x) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                w[0],
                w[1],
                1e-14,
                1e-10,
            );
            if let Some(e) = err {
                return Err(e);
            }
            acc += piece?.value;
            cdf.push(acc);
        }
        Ok(RadialLaw { r, cdf, pdf, mass: acc })
    }

    /// Mass captured by the table; 1 up to quadrature error.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// CDF by cubic Hermite interpolation with the density as slope,
    /// normalized by the tabulated mass.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let n = self.r.len() - 1;
        let h = self.r[1];
        let i = ((x / h) as usize).min(n);
        if i >= n {
            return 1.0;
        }
        let s = (x - self.r[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * self.cdf[i] + h10 * h * self.pdf[i] + h01 * self.cdf[i + 1] + h11 * h * self.pdf[i + 1];
        (v / self.mass).clamp(0.0, 1.0)
    }
}

/// `ln G(r)` for the Green function `G = int_0^inf p dt`.
pub fn log_green(sf: SpaceForm, r: f64) -> Result<f64> {
    check_supported(sf)?;
    if r == 0.0 {
        return Err(Error::Singularity("Green function at its pole r = 0".into()));
    }
    if !(r > 0.0) {
        return Err(Error::domain(format!("Green function needs r > 0, got {r}")));
    }
    let a = sf.a;
    let x = a * r;
    let unit = match sf.dim {
        // (1/2pi) ln coth(x/2) = (1/2pi) 2 atanh(e^{-x})
        2 => {
            let q = (-x).exp();
            let ln_lncoth = if x > 30.0 {
                LN_2 - x + (1.0 + q * q / 3.0).ln()
            } else {
                (2.0 * q.atanh()).ln()
            };
            ln_lncoth - (2.0 * PI).ln()
        }
        3 => -x - ln_sinh(x) - (4.0 * PI).ln(),
        _ => unreachable!(),
    };
    Ok((sf.dim as f64 - 2.0) * a.ln() + unit)
}

pub fn green_function(sf: SpaceForm, r: f64) -> Result<f64> {
    Ok(log_green(sf, r)?.exp())
}

/// `k(x, y, xi) = exp(-(d-1) a b(y, x, xi))`.
pub fn martin_kernel(sf: SpaceForm, x: &HPoint, y: &HPoint, xi: &BoundaryPoint) -> Result<f64> {
    if x.dim() != sf.dim || (x.curvature() - sf.a).abs() > 1e-15 * sf.a {
        return Err(Error::param("point does not belong to the model"));
    }
    Ok((-sf.growth() * busemann(y, x, xi)?).exp())
}

/// Constants of a constant-curvature model under the generator `Delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelConstants {
    /// Linear drift `(d-1) a`.
    pub ell: f64,
    /// Stochastic entropy `(d-1)^2 a^2`.
    pub h: f64,
    /// Bottom of the spectrum `(d-1)^2 a^2 / 4`.
    pub lambda0: f64,
    /// Volume entropy `(d-1) a`.
    pub h_top: f64,
    /// Variance rate of `d(x, omega_t)`; the radial noise is `sqrt(2) dW`.
    pub sigma_ell_sq: f64,
    /// Variance rate of `log G(x, omega_t)`, equal to `2h` here.
    pub sigma_kappa_sq: f64,
}

pub fn model_constants(m: &ModelSpec) -> Result<ModelConstants> {
    let sf = m
        .space_form()
        .ok_or_else(|| Error::Unsupported("model constants are known in constant curvature only".into()))?;
    let g = sf.growth();
    Ok(ModelConstants {
        ell: g,
        h: g * g,
        lambda0: g * g / 4.0,
        h_top: g,
        sigma_ell_sq: 2.0,
        sigma_kappa_sq: 2.0 * g * g,
    })
}

/// Relative residual of the radial heat equation `p_t = p_rr + (d-1) a coth(a r) p_r`
/// at `(t, r)`, from fourth-order central differences with step `h`.
pub fn radial_pde_residual(sf: SpaceForm, t: f64, r: f64, h: f64) -> Result<f64> {
    if !(t > 2.0 * h && r > 2.0 * h) {
        return Err(Error::domain(format!("stencil of width {h} does not fit at t = {t}, r = {r}")));
    }
    let p = |t: f64, r: f64| heat_kernel(sf, t, r);
    let pt = (-p(t + 2.0 * h, r)? + 8.0 * p(t + h, r)? - 8.0 * p(t - h, r)? + p(t - 2.0 * h, r)?) / (12.0 * h);
    let (r2m, r1m, r0, r1p, r2p) = (p(t, r - 2.0 * h)?, p(t, r - h)?, p(t, r)?, p(t, r + h)?, p(t, r + 2.0 * h)?);
    let pr = (-r2p + 8.0 * r1p - 8.0 * r1m + r2m) / (12.0 * h);
    let prr = (-r2p + 16.0 * r1p - 30.0 * r0 + 16.0 * r1m - r2m) / (12.0 * h * h);
    let drift = ModelSpec::ConstantCurvature(sf).radial_drift(r)?;
    let scale = pt.abs().max(prr.abs()).max((drift * pr).abs());
    Ok((pt - prr - drift * pr).abs() / scale)
}

/// Outcome of comparing two constant-curvature heat kernels on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
    pub points: usize,
    /// Grid points where `ln p_b - ln p_a` exceeds the tolerance.
    pub violations: usize,
    /// Largest `ln p_b - ln p_a` seen (negative when `b > a` everywhere).
    pub max_log_excess: f64,
    pub tolerance: f64,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

/// Check `p_{H^d(-b^2)}(t, r) <= p_{H^d(-a^2)}(t, r)` on the grid `ts x rs`.
pub fn comparison_check(a: f64, b: f64, dim: usize, ts: &[f64], rs: &[f64]) -> Result<ComparisonReport> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::param(format!("comparison needs 0 < a <= b, got a = {a}, b = {b}")));
    }
    let sa = SpaceForm::new(dim, a)?;
    let sb = SpaceForm::new(dim, b)?;
    let tolerance = 1e-8;
    let mut violations = 0;
    let mut max_log_excess = f64::NEG_INFINITY;
    for &t in ts {
        for &r in rs {
            let excess = if a == b { 0.0 } else { log_heat_kernel(sb, t, r)? - log_heat_kernel(sa, t, r)? };
            if excess > tolerance {
                violations += 1;
            }
            max_log_excess = max_log_excess.max(excess);
        }
    }
    Ok(ComparisonReport { dim, a, b, points: ts.len() * rs.len(), violations, max_log_excess, tolerance })
}

/// Fit of the Gaussian-type upper bound
/// `p(t, r) <= C (r^2/t)^{1+d/2} exp(-r^2/4t - lambda0 t)` for `t > 1`.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianBoundReport {
    /// Smallest `C` making the bound hold on the grid.
    pub c_fit: f64,
    pub argmax_t: f64,
    pub argmax_r: f64,
    /// Log-log slope of the ratio kernel/bound in `t` at `r = 1`, over `t in [10, 50]`.
    pub slope_t_at_r1: f64,
    /// Largest ratio along the diagonal `r^2 = t`.
    pub max_ratio_diagonal: f64,
}

pub fn gaussian_bound_diagnostic(sf: SpaceForm) -> Result<GaussianBoundReport> {
    check_supported(sf)?;
    let d = sf.dim as f64;
    let lambda0 = sf.growth().powi(2) / 4.0;
    let ln_ratio = |t: f64, r: f64| -> Result<f64> {
        let ln_bound = (1.0 + 0.5 * d) * (r * r / t).ln() - r * r / (4.0 * t) - lambda0 * t;
        Ok(log_heat_kernel(sf, t, r)? - ln_bound)
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=49 {
        let t = 1.0 + i as f64;
        for j in 0..=99 {
            let r = 0.5 + j as f64 * 0.5;
            let v = ln_ratio(t, r)?;
            if v > best.0 {
                best = (v, t, r);
            }
        }
    }
    let (t1, t2) = (10.0f64, 50.0f64);
    let slope_t_at_r1 = (ln_ratio(t2, 1.0)? - ln_ratio(t1, 1.0)?) / (t2.ln() - t1.ln());
    let mut max_diag = f64::NEG_INFINITY;
    for i in 0..=49 {
        let t = 1.0 + i as f64;
        max_diag = max_diag.max(ln_ratio(t, t.sqrt())?);
    }
    Ok(GaussianBoundReport {
        c_fit: best.0.exp(),
        argmax_t: best.1,
        argmax_r: best.2,
        slope_t_at_r1,
        max_ratio_diagonal: max_diag.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(d: usize, a: f64) -> SpaceForm {
        SpaceForm::new(d, a).unwrap()
    }

    #[test]
    fn h3_origin_value() {
        let p = heat_kernel(sf(3, 1.0), 1.0, 0.0).unwrap();
        assert!((p - (4.0 * PI).powf(-1.5) * (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn h2_kernel_continuous_at_pole() {
        let s = sf(2, 1.0);
        for t in [0.1, 1.0, 10.0] {
            let p0 = heat_kernel(s, t, 0.0).unwrap();
            let p1 = heat_kernel(s, t, 1e-7).unwrap();
            assert!((p0 - p1).abs() < 1e-6 * p0, "t = {t}: {p0} vs {p1}");
        }
    }

    #[test]
    fn h2_short_time_is_euclidean() {
        let t = 1e-3;
        let p = heat_kernel(sf(2, 1.0), t, 0.0).unwrap();
        let flat = 1.0 / (4.0 * PI * t);
        assert!((p / flat - 1.0).abs() < 2e-3, "{}", p / flat);
    }

    #[test]
    fn scaling_law() {
        for d in [2, 3] {
            let (t, r, a) = (0.7, 1.3, 1.7);
            let lhs = heat_kernel(sf(d, a), t, r).unwrap();
            let rhs = a.powi(d as i32) * heat_kernel(sf(d, 1.0), a * a * t, a * r).unwrap();
            assert!((lhs - rhs).abs() < 1e-13 * rhs);
        }
    }

    #[test]
    fn green_closed_forms() {
        let g2 = green_function(sf(2, 1.0), 1.0).unwrap();
        assert!((g2 - (1.0f64 / 0.5f64.tanh()).ln() / (2.0 * PI)).abs() < 1e-15);
        let g3 = green_function(sf(3, 1.0), 1.0).unwrap();
        assert!((g3 - (-1.0f64).exp() / (4.0 * PI * 1f64.sinh())).abs() < 1e-16);
        // log form continuous across the large-r switch
        let s = sf(2, 1.0);
        let below = log_green(s, 30.0 - 1e-9).unwrap();
        let above = log_green(s, 30.0 + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-8);
        assert!(log_green(s, 1e4).unwrap().is_finite());
        assert!(matches!(log_green(s, 0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn unsupported_dimensions_and_models() {
        assert!(matches!(heat_kernel(sf(4, 1.0), 1.0, 1.0), Err(Error::Unsupported(_))));
        assert!(matches!(heat_kernel(sf(3, 1.0), 0.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn constants_table() {
        let c3 = model_constants(&ModelSpec::constant(3, 1.0).unwrap()).unwrap();
        assert_eq!(
            (c3.ell, c3.h, c3.lambda0, c3.h_top, c3.sigma_ell_sq, c3.sigma_kappa_sq),
            (2.0, 4.0, 1.0, 2.0, 2.0, 8.0)
        );
        let c2 = model_constants(&ModelSpec::constant(2, 1.0).unwrap()).unwrap();
        assert_eq!(
            (c2.ell, c2.h, c2.lambda0, c2.h_top, c2.sigma_ell_sq, c2.sigma_kappa_sq),
            (1.0, 1.0, 0.25, 1.0, 2.0, 2.0)
        );
        let c32 = model_constants(&ModelSpec::constant(3, 2.0).unwrap()).unwrap();
        assert_eq!((c32.ell, c32.h, c32.lambda0), (2.0 * c3.ell, 4.0 * c3.h, 4.0 * c3.lambda0));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
