//! Estimators and tests on path functionals.
//!
//! Per-path values are kept as `(path_id, value)` samples. Every reduction
//! first sorts by path id and then sums pairwise, so splitting a path set
//! into shards and merging gives bit-identical results in any order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, halfplane, BoundaryPoint};
use crate::heat::{log_green, ModelConstants};
use crate::models::SpaceForm;
use crate::sampler::{PathSet, Scheme};

/// Per-path values keyed by path id.
pub type Sample = Vec<(u64, f64)>;

/// Concatenate shards and restore path-id order.
pub fn merge_samples(shards: Vec<Sample>) -> Sample {
    let mut all: Sample = shards.into_iter().flatten().collect();
    all.sort_by_key(|&(id, _)| id);
    all
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn ordered_values(sample: &Sample) -> Vec<f64> {
    let mut s = sample.clone();
    s.sort_by_key(|&(id, _)| id);
    s.into_iter().map(|(_, v)| v).collect()
}

/// Standard normal CDF through the `statrs` erfc; absolute error below 1e-10.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// How an estimate was formed from the paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Functional at `T` divided by `T`.
    Endpoint,
    /// Increment over `[T/2, T]` divided by `T/2`; cancels the O(1) offset
    /// that the endpoint form carries.
    Increment,
    /// Plain sample mean of a per-path quantity.
    Mean,
    /// Closed-form value, no sampling error.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
    pub method: Method,
}

impl EstimateWithCI {
    pub fn exact(value: f64) -> Self {
        EstimateWithCI { value, std_error: 0.0, n: 0, method: Method::Exact }
    }

    pub fn from_sample(sample: &Sample, method: Method) -> Result<Self> {
        let v = ordered_values(sample);
        let (mean, var) = mean_var(&v)?;
        Ok(EstimateWithCI { value: mean, std_error: (var / v.len() as f64).sqrt(), n: v.len(), method })
    }

    /// `|value - target| <= tol + k * std_error`.
    pub fn within(&self, target: f64, tol: f64, k: f64) -> bool {
        (self.value - target).abs() <= tol + k * self.std_error
    }
}

/// Sample mean and unbiased variance.
pub fn mean_var(v: &[f64]) -> Result<(f64, f64)> {
    if v.len() < 2 {
        return Err(Error::config(format!("need at least 2 values, got {}", v.len())));
    }
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let dev: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
    Ok((mean, pairwise_sum(&dev) / (n - 1.0)))
}

/// Exact one-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic 95% critical value `1.36 / sqrt(n_eff)` of the KS statistic.
pub fn ks_critical_95(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

fn sample_at(set: &PathSet, t: f64, f: impl Fn(f64) -> Result<f64>) -> Result<Sample> {
    set.distances_at(t)?.into_iter().map(|(id, r)| Ok((id, f(r)?))).collect()
}

fn check_paths(set: &PathSet, min: usize) -> Result<()> {
    let n = set.complete().count();
    if n < min {
        return Err(Error::config(format!("estimator needs at least {min} complete paths, got {n}")));
    }
    Ok(())
}

fn increment_sample(set: &PathSet, f: impl Fn(f64) -> Result<f64>) -> Result<Sample> {
    let t = set.spec.t_end;
    let half = 0.5 * t;
    let end = sample_at(set, t, &f)?;
    let mid = sample_at(set, half, &f)?;
    Ok(end.into_iter().zip(mid).map(|((id, a), (_, b))| (id, (a - b) / half)).collect())
}

/// Estimate `lim (1/T) F(d(x, omega_T))` either from the endpoint or from the
/// increment over `[T/2, T]` (which needs a recorded state at `T/2`).
fn rate_estimate(set: &PathSet, method: Method, f: impl Fn(f64) -> Result<f64>) -> Result<EstimateWithCI> {
    check_paths(set, 30)?;
    let t = set.spec.t_end;
    if !(t > 0.0) {
        return Err(Error::config("rate estimators need T > 0"));
    }
    let sample = match method {
        Method::Endpoint => sample_at(set, t, |r| Ok(f(r)? / t))?,
        Method::Increment => increment_sample(set, f)?,
        _ => return Err(Error::config("rate estimators use the endpoint or increment method")),
    };
    EstimateWithCI::from_sample(&sample, method)
}

/// Linear drift: `d(x, omega_T) / T` averaged over paths.
pub fn drift_estimate(set: &PathSet, method: Method) -> Result<EstimateWithCI> {
    rate_estimate(set, method, Ok)
}

fn space_form_of(set: &PathSet, what: &str) -> Result<SpaceForm> {
    set.spec
        .model
        .space_form()
        .ok_or_else(|| Error::Unsupported(format!("{what} needs a constant-curvature model")))
}

/// Stochastic entropy: `-log G(d(x, omega_T)) / T`.
pub fn entropy_estimate(set: &PathSet, method: Method) -> Result<EstimateWithCI> {
    let sf = space_form_of(set, "entropy estimation")?;
    rate_estimate(set, method, |r| Ok(-log_green(sf, r)?))
}

/// Volume growth exponent: `log A(d(x, omega_T)) / T`.
pub fn growth_estimate(set: &PathSet, method: Method) -> Result<EstimateWithCI> {
    let m = set.spec.model.clone();
    rate_estimate(set, method, move |r| m.log_volume_density(r))
}

#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub n_paths: usize,
    pub t: f64,
    pub normalized_mean: f64,
    pub normalized_var: f64,
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    /// Sample variance of the centered functional divided by `T`.
    pub sigma_hat_sq: f64,
    pub sigma_hat_sq_se: f64,
    pub predicted_sigma_sq: f64,
    pub pass: bool,
}

/// KS test of `(Y - center) / sqrt(sigma_sq * T)` against the standard normal.
pub fn clt_from_values(values: &Sample, t: f64, center: f64, sigma_sq: f64, ks_threshold: f64) -> Result<CltReport> {
    let v = ordered_values(values);
    let scaled: Vec<f64> = v.iter().map(|y| (y - center) / t.sqrt()).collect();
    let (_, var) = mean_var(&scaled)?;
    // standard error of the sample variance from the fourth central moment
    let n = scaled.len() as f64;
    let m = pairwise_sum(&scaled) / n;
    let m4 = pairwise_sum(&scaled.iter().map(|x| (x - m).powi(4)).collect::<Vec<_>>()) / n;
    let var_se = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    let normalized: Vec<f64> = scaled.iter().map(|x| x / sigma_sq.sqrt()).collect();
    let (nm, nv) = mean_var(&normalized)?;
    let ks = ks_statistic(&normalized, normal_cdf);
    Ok(CltReport {
        n_paths: v.len(),
        t,
        normalized_mean: nm,
        normalized_var: nv,
        ks_statistic: ks,
        ks_threshold,
        sigma_hat_sq: var,
        sigma_hat_sq_se: var_se,
        predicted_sigma_sq: sigma_sq,
        pass: ks <= ks_threshold,
    })
}

fn clt_preconditions(set: &PathSet) -> Result<()> {
    check_paths(set, 1000)?;
    if set.spec.t_end < 50.0 {
        return Err(Error::config(format!("CLT tests need T >= 50, got {}", set.spec.t_end)));
    }
    Ok(())
}

/// CLT for the distance: `(d(x, omega_T) - ell T) / sqrt(sigma_ell^2 T)`.
pub fn clt_test_distance(set: &PathSet, c: &ModelConstants, ks_threshold: f64) -> Result<CltReport> {
    clt_preconditions(set)?;
    let t = set.spec.t_end;
    let values = set.final_distances()?;
    clt_from_values(&values, t, c.ell * t, c.sigma_ell_sq, ks_threshold)
}

/// CLT for the Green function: `(log G(d(x, omega_T)) + h T) / sqrt(sigma_kappa^2 T)`.
pub fn clt_test_green(set: &PathSet, c: &ModelConstants, ks_threshold: f64) -> Result<CltReport> {
    clt_preconditions(set)?;
    let sf = space_form_of(set, "the Green-function CLT")?;
    let t = set.spec.t_end;
    let values = sample_at(set, t, |r| log_green(sf, r))?;
    clt_from_values(&values, t, -c.h * t, c.sigma_kappa_sq, ks_threshold)
}

/// Busemann values `b(omega_t, x, xi)` at time `t`, `x` the start of each path.
pub fn busemann_sample(set: &PathSet, t: f64, xi: &BoundaryPoint) -> Result<Sample> {
    space_form_of(set, "the Busemann drift test")?;
    set.complete()
        .map(|p| {
            let i = p.index_at(t).ok_or_else(|| Error::config(format!("time {t} was not recorded")))?;
            let v = if set.spec.scheme == Scheme::HalfPlaneExact {
                let hb = halfplane::boundary_from_null(xi)?;
                let (s0, s1) = (p.state(0), p.state(i));
                halfplane::busemann_log((s1[0], s1[1]), (s0[0], s0[1]), hb)
            } else {
                geometry::busemann(&set.point(p, i)?, &set.point(p, 0)?, xi)?
            };
            Ok((p.path_id, v))
        })
        .collect()
}

/// Mean of `b(omega_T, x, xi)`; equals `(d-1) a T` in constant curvature.
pub fn busemann_drift_test(set: &PathSet, xi: &BoundaryPoint) -> Result<EstimateWithCI> {
    let s = busemann_sample(set, set.spec.t_end, xi)?;
    EstimateWithCI::from_sample(&s, Method::Mean)
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub t: f64,
    /// `E[(xi|eta)_{omega_T}] - (xi|eta)_x`
    pub gromov_gain: EstimateWithCI,
    /// `(d-1) a T`
    pub bound: f64,
    pub gain_pass: bool,
    /// `E[d^{omega_T,tau}(xi,eta) / d^{x,tau}(xi,eta)]`
    pub visual_ratio: EstimateWithCI,
    pub ratio_pass: bool,
    /// `-ln(ratio) / T`
    pub fitted_rate: f64,
}

/// Growth of the Gromov product of two boundary points seen from the path,
/// and contraction of the visual distance.
pub fn contraction_test(set: &PathSet, xi: &BoundaryPoint, eta: &BoundaryPoint, tau: f64) -> Result<ContractionReport> {
    let sf = space_form_of(set, "the contraction test")?;
    let t = set.spec.t_end;
    let gromov_at = |p: &crate::sampler::Path, i: usize| -> Result<f64> {
        if set.spec.scheme == Scheme::HalfPlaneExact {
            let s = p.state(i);
            halfplane::gromov_log(halfplane::boundary_from_null(xi)?, halfplane::boundary_from_null(eta)?, (s[0], s[1]))
        } else {
            geometry::gromov_product(xi, eta, &set.point(p, i)?)
        }
    };
    let mut gain = Sample::new();
    let mut ratio = Sample::new();
    for p in set.complete() {
        let i = p.index_at(t).ok_or_else(|| Error::config("end time not recorded"))?;
        let g = gromov_at(p, i)? - gromov_at(p, 0)?;
        gain.push((p.path_id, g));
        ratio.push((p.path_id, (-tau * g).exp()));
    }
    let gromov_gain = EstimateWithCI::from_sample(&gain, Method::Mean)?;
    let visual_ratio = EstimateWithCI::from_sample(&ratio, Method::Mean)?;
    let bound = sf.growth() * t;
    Ok(ContractionReport {
        t,
        gain_pass: gromov_gain.value >= bound - 3.0 * gromov_gain.std_error,
        ratio_pass: visual_ratio.value < 1.0,
        fitted_rate: if t > 0.0 { -visual_ratio.value.ln() / t } else { 0.0 },
        gromov_gain,
        bound,
        visual_ratio,
    })
}

/// One line of the identity dashboard.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `3 sqrt(se_lhs^2 + se_rhs^2)`
    pub band: f64,
    /// `None` when an input was missing.
    pub pass: Option<bool>,
}

/// Inputs of the dashboard; missing estimates are reported as skipped.
#[derive(Debug, Clone, Default)]
pub struct DashboardInputs {
    pub lambda0: Option<f64>,
    pub h_top: Option<f64>,
    pub ell: Option<EstimateWithCI>,
    pub h: Option<EstimateWithCI>,
    pub upsilon: Option<EstimateWithCI>,
    /// Variance rate of `log G` with its standard error.
    pub sigma_kappa_sq: Option<EstimateWithCI>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Dashboard {
    pub checks: Vec<IdentityCheck>,
}

impl Dashboard {
    /// All evaluated checks pass and none was skipped.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass == Some(true))
    }
}

pub fn identity_dashboard(inp: &DashboardInputs) -> Dashboard {
    let band = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
    let eq = |name: &str, l: Option<(f64, f64)>, r: Option<(f64, f64)>| match (l, r) {
        (Some((lv, ls)), Some((rv, rs))) => {
            let b = band(ls, rs);
            IdentityCheck { name: name.into(), lhs: lv, rhs: rv, band: b, pass: Some((lv - rv).abs() <= b) }
        }
        _ => IdentityCheck { name: name.into(), lhs: f64::NAN, rhs: f64::NAN, band: f64::NAN, pass: None },
    };
    let est = |e: &Option<EstimateWithCI>| e.map(|e| (e.value, e.std_error));
    let mut checks = vec![
        eq("4 lambda0 = h", inp.lambda0.map(|l| (4.0 * l, 0.0)), est(&inp.h)),
        // delta method: se(ell^2) = 2 ell se(ell)
        eq("ell^2 = h", inp.ell.map(|e| (e.value * e.value, 2.0 * e.value.abs() * e.std_error)), est(&inp.h)),
        eq(
            "h = ell h_top",
            est(&inp.h),
            match (inp.ell, inp.h_top) {
                (Some(e), Some(ht)) => Some((e.value * ht, e.std_error * ht)),
                _ => None,
            },
        ),
        eq("upsilon = h", est(&inp.upsilon), est(&inp.h)),
    ];
    // inequality sigma_kappa^2 >= 2 h - 3 SE
    checks.push(match (inp.sigma_kappa_sq, inp.h) {
        (Some(s), Some(h)) => {
            let b = band(s.std_error, 2.0 * h.std_error);
            IdentityCheck {
                name: "sigma_kappa^2 >= 2 h".into(),
                lhs: s.value,
                rhs: 2.0 * h.value,
                band: b,
                pass: Some(s.value >= 2.0 * h.value - b),
            }
        }
        _ => IdentityCheck {
            name: "sigma_kappa^2 >= 2 h".into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            band: f64::NAN,
            pass: None,
        },
    });
    Dashboard { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-9);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-9);
    }

    #[test]
    fn ks_exact_small_sample() {
        // uniform CDF, sample {0.1, 0.5, 0.6}: D = max(1/3 - 0.1, 0.5 - 1/3, 2/3 - 0.5, 1 - 0.6, ...) = 0.4
        let d = ks_statistic(&[0.6, 0.1, 0.5], |x| x);
        assert!((d - 0.4).abs() < 1e-15);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_injection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5000;
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ks = ks_statistic(&x, normal_cdf);
        assert!(ks < ks_critical_95(n) * 1.3, "{ks}");
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.5).collect();
        let ks2 = ks_statistic(&shifted, normal_cdf);
        assert!(ks2 > 5.0 * ks_critical_95(n));
    }

    #[test]
    fn merging_shards_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s: Sample = (0..1001u64).map(|i| (i, StandardNormal.sample(&mut rng))).collect();
        let whole = EstimateWithCI::from_sample(&s, Method::Mean).unwrap();
        let shards = vec![s[600..].to_vec(), s[..250].to_vec(), s[250..600].to_vec()];
        let merged = merge_samples(shards);
        let e = EstimateWithCI::from_sample(&merged, Method::Mean).unwrap();
        assert_eq!(whole, e);
    }

    #[test]
    fn dashboard_skips_missing() {
        let d = identity_dashboard(&DashboardInputs { lambda0: Some(1.0), ..Default::default() });
        assert!(!d.pass());
        assert!(d.checks.iter().all(|c| c.pass.is_none()));
        let e = |v| Some(EstimateWithCI { value: v, std_error: 0.01, n: 100, method: Method::Increment });
        let full = identity_dashboard(&DashboardInputs {
            lambda0: Some(1.0),
            h_top: Some(2.0),
            ell: e(2.0),
            h: e(4.0),
            upsilon: e(4.01),
            sigma_kappa_sq: e(8.0),
        });
        assert!(full.pass(), "{full:?}");
    }
}
