//! Busemann, contraction and identity-dashboard estimators against
//! closed forms evaluated directly on the simulated states.

use hypbm::geometry::halfplane::{boundary_to_null, HalfPlaneBoundary};
use hypbm::geometry::BoundaryPoint;
use hypbm::models::ModelSpec;
use hypbm::sampler::{simulate, PathSet, Scheme, SimSpec};
use hypbm::stats::*;

fn sim(dim: usize, scheme: Scheme, t: f64, n: usize, seed: u64) -> PathSet {
    let m = ModelSpec::constant(dim, 1.0).unwrap();
    let dt = if scheme == Scheme::HyperboloidEm { 0.005 } else { 0.01 };
    simulate(&SimSpec::new(m, scheme, t, dt, n, seed).endpoints_only()).unwrap()
}

#[test]
fn busemann_mean_grows_linearly_in_h3() {
    // Delta b = (d - 1) a, so E b(omega_T) = 2 T exactly
    let xi = BoundaryPoint::from_direction(&[0.3, -0.5, 0.8]).unwrap();
    for scheme in [Scheme::PolarEm, Scheme::HyperboloidEm] {
        let set = sim(3, scheme, 5.0, 4000, 41);
        let b = busemann_drift_test(&set, &xi).unwrap();
        assert!((b.value - 10.0).abs() <= 4.0 * b.std_error, "{scheme:?}: {b:?}");
    }
}

#[test]
fn halfplane_busemann_matches_log_height() {
    let set = sim(2, Scheme::HalfPlaneExact, 5.0, 500, 42);
    let s = busemann_sample(&set, 5.0, &boundary_to_null(HalfPlaneBoundary::Infinity)).unwrap();
    for (p, (id, b)) in set.paths.iter().zip(&s) {
        assert_eq!(p.path_id, *id);
        // half-plane states are (x, log y)
        assert!((b + p.last_state()[1]).abs() < 1e-12);
    }
}

#[test]
fn halfplane_and_hyperboloid_busemann_agree() {
    let xi = boundary_to_null(HalfPlaneBoundary::Real(0.7));
    let a: Vec<f64> = busemann_sample(&sim(2, Scheme::HalfPlaneExact, 3.0, 4000, 43), 3.0, &xi)
        .unwrap()
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let b: Vec<f64> = busemann_sample(&sim(2, Scheme::HyperboloidEm, 3.0, 4000, 44), 3.0, &xi)
        .unwrap()
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    // 99% two-sample critical value
    assert!(ks_two_sample(&a, &b) <= 1.63 * (2.0f64 / 4000.0).sqrt());
}

#[test]
fn contraction_gain_equals_gromov_product_of_zero_and_infinity() {
    // seen from z = x + iy, (0 | infinity)_z = log(1 + x^2 / y^2) / 2, and 0 from i
    let set = sim(2, Scheme::HalfPlaneExact, 5.0, 2000, 45);
    let xi = boundary_to_null(HalfPlaneBoundary::Real(0.0));
    let eta = boundary_to_null(HalfPlaneBoundary::Infinity);
    let rep = contraction_test(&set, &xi, &eta, 0.3).unwrap();
    let direct: Vec<f64> = set
        .paths
        .iter()
        .map(|p| {
            let s = p.last_state();
            0.5 * (1.0 + (s[0] / s[1].exp()).powi(2)).ln()
        })
        .collect();
    let mean = pairwise_sum(&direct) / direct.len() as f64;
    assert!((rep.gromov_gain.value - mean).abs() < 1e-9);
    assert!(rep.gain_pass, "{rep:?}");
    assert!(rep.ratio_pass);
    assert!(rep.fitted_rate > 0.0);
}

#[test]
fn dashboard_pass_fail_and_skip() {
    let e = |value, std_error| Some(EstimateWithCI { value, std_error, n: 1000, method: Method::Increment });
    let good = DashboardInputs {
        lambda0: Some(1.0),
        h_top: Some(2.0),
        ell: e(2.0, 0.01),
        h: e(4.01, 0.02),
        upsilon: e(4.0, 0.02),
        sigma_kappa_sq: e(8.0, 0.3),
    };
    let d = identity_dashboard(&good);
    assert!(d.pass(), "{d:?}");
    assert_eq!(d.checks.len(), 5);

    let bad = DashboardInputs { h: e(4.5, 0.02), ..good.clone() };
    let d = identity_dashboard(&bad);
    assert!(!d.pass());
    assert_eq!(d.checks[0].pass, Some(false));

    let missing = DashboardInputs { upsilon: None, ..good };
    let d = identity_dashboard(&missing);
    assert!(!d.pass());
    assert_eq!(d.checks[3].pass, None);
    assert!(d.checks.iter().filter(|c| c.pass.is_some()).all(|c| c.pass == Some(true)));
}
