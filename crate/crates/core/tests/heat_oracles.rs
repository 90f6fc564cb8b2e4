//! Oracle checks for the closed-form kernels: normalization, the radial heat
//! equation, time integrals, the Martin limit and harmonicity.

use std::f64::consts::PI;

use hypbm::geometry::{distance, exp_map, BoundaryPoint, HPoint, HTangent};
use hypbm::heat::*;
use hypbm::models::{ModelSpec, SpaceForm};
use hypbm::quad;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sf(d: usize, a: f64) -> SpaceForm {
    SpaceForm::new(d, a).unwrap()
}

#[test]
fn normalization_of_radial_law() {
    for d in [2, 3] {
        for t in [0.1, 1.0, 10.0] {
            let mass = radial_mass(sf(d, 1.0), t).unwrap();
            assert!((mass - 1.0).abs() <= 1e-6, "d = {d}, t = {t}: mass {mass}");
        }
    }
    let mass = radial_mass(sf(3, 0.6), 2.0).unwrap();
    assert!((mass - 1.0).abs() <= 1e-6);
}

#[test]
fn radial_heat_equation_residual() {
    for d in [2, 3] {
        let s = sf(d, 1.0);
        let m = ModelSpec::ConstantCurvature(s);
        let h = 0.01;
        let p = |t: f64, r: f64| heat_kernel(s, t, r).unwrap();
        for &t in &[0.5, 1.0, 3.0] {
            for &r in &[0.3, 1.0, 2.5, 4.0] {
                // fourth-order central stencils
                let dt = (-p(t + 2.0 * h, r) + 8.0 * p(t + h, r) - 8.0 * p(t - h, r) + p(t - 2.0 * h, r)) / (12.0 * h);
                let dr = (-p(t, r + 2.0 * h) + 8.0 * p(t, r + h) - 8.0 * p(t, r - h) + p(t, r - 2.0 * h)) / (12.0 * h);
                let drr = (-p(t, r + 2.0 * h) + 16.0 * p(t, r + h) - 30.0 * p(t, r) + 16.0 * p(t, r - h)
                    - p(t, r - 2.0 * h))
                    / (12.0 * h * h);
                let drift = m.radial_drift(r).unwrap();
                let rhs = drr + drift * dr;
                let scale = dt.abs().max(drr.abs()).max((drift * dr).abs());
                let rel = (dt - rhs).abs() / scale;
                assert!(rel <= 1e-5, "d = {d}, t = {t}, r = {r}: residual {rel:e}");
            }
        }
    }
}

#[test]
fn green_is_time_integral_of_kernel() {
    // substitute t = e^v to cover short and long times
    for (d, r) in [(3, 1.0), (2, 1.0), (2, 0.4), (3, 2.5)] {
        let s = sf(d, 1.0);
        let f = |v: f64| {
            let t = v.exp();
            t * heat_kernel(s, t, r).unwrap()
        };
        let num = quad::integrate_with_breaks(f, &[-12.0, -2.0, 0.0, 2.0, 6.0], 1e-14, 1e-11).unwrap().value;
        let g = green_function(s, r).unwrap();
        assert!((num - g).abs() <= 1e-6 * g, "d = {d}, r = {r}: {num} vs {g}");
    }
}

#[test]
fn green_solves_radial_ode_in_the_plane() {
    // The flux 2 pi sinh(r) G'(r) must equal -1 at every radius, and G -> 0.
    let s = sf(2, 1.0);
    for r in [0.1f64, 0.5, 1.0, 3.0, 8.0] {
        let h = 1e-4 * r.max(1.0);
        let g = |x: f64| green_function(s, x).unwrap();
        let deriv = (g(r - 2.0 * h) - 8.0 * g(r - h) + 8.0 * g(r + h) - g(r + 2.0 * h)) / (12.0 * h);
        let flux = 2.0 * PI * r.sinh() * deriv;
        assert!((flux + 1.0).abs() < 1e-8, "r = {r}: flux {flux}");
    }
    // integrate the ODE from infinity: G(r) = int_r^inf ds / (2 pi sinh s)
    for r in [0.2, 1.0, 4.0] {
        let num = quad::integrate(|x: f64| 1.0 / (2.0 * PI * x.sinh()), r, r + 60.0, 1e-16, 1e-13).unwrap().value;
        let g = green_function(s, r).unwrap();
        assert!((num - g).abs() < 1e-10 * g.max(1e-3), "r = {r}");
    }
}

#[test]
fn green_asymptotic_slope() {
    // -(1/r) log G(r) = 2 + ln(2 pi)/r + O(e^{-2r}/r) in H^3: the secant slope
    // is already exact at moderate r while the ratio approaches 2 like 1/r.
    let s = sf(3, 1.0);
    let secant = -(log_green(s, 30.0).unwrap() - log_green(s, 20.0).unwrap()) / 10.0;
    assert!((secant - 2.0).abs() < 0.01 * 2.0, "{secant}");
    let ratio = -log_green(s, 30.0).unwrap() / 30.0;
    assert!((ratio - (2.0 + (2.0 * PI).ln() / 30.0)).abs() < 1e-12, "{ratio}");
    let far = -log_green(s, 300.0).unwrap() / 300.0;
    assert!((far - 2.0).abs() < 0.01 * 2.0, "{far}");
    let s2 = sf(2, 1.0);
    let secant2 = -(log_green(s2, 30.0).unwrap() - log_green(s2, 20.0).unwrap()) / 10.0;
    assert!((secant2 - 1.0).abs() < 0.01);
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, a: f64, rmax: f64) -> HPoint {
    let o = HPoint::origin(d, a).unwrap();
    let dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
    let v = HTangent::from_frame(&o, &dir).unwrap();
    exp_map(&o, &v, rng.random::<f64>() * rmax).unwrap()
}

fn random_boundary(rng: &mut ChaCha8Rng, d: usize) -> BoundaryPoint {
    let dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
    BoundaryPoint::from_direction(&dir).unwrap()
}

#[test]
fn martin_kernel_is_limit_of_green_ratios() {
    let s = sf(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let x = random_point(&mut rng, 3, 1.0, 2.0);
        let y = random_point(&mut rng, 3, 1.0, 2.0);
        let xi = random_boundary(&mut rng, 3);
        let v = hypbm::geometry::direction_to(&x, &xi).unwrap();
        let z = exp_map(&x, &v, 200.0).unwrap();
        let ratio = (log_green(s, distance(&y, &z).unwrap()).unwrap() - log_green(s, distance(&x, &z).unwrap()).unwrap()).exp();
        let k = martin_kernel(s, &x, &y, &xi).unwrap();
        assert!((k - ratio).abs() / k <= 0.01, "k = {k}, ratio = {ratio}");
    }
}

#[test]
fn martin_kernel_identities() {
    let s = sf(3, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_point(&mut rng, 3, 1.0, 1.0);
    let y = random_point(&mut rng, 3, 1.0, 1.0);
    let z = random_point(&mut rng, 3, 1.0, 1.0);
    let xi = random_boundary(&mut rng, 3);
    assert!((martin_kernel(s, &x, &x, &xi).unwrap() - 1.0).abs() < 1e-14);
    let lhs = martin_kernel(s, &x, &z, &xi).unwrap();
    let rhs = martin_kernel(s, &x, &y, &xi).unwrap() * martin_kernel(s, &y, &z, &xi).unwrap();
    assert!((lhs - rhs).abs() < 1e-12 * lhs);
    let v = hypbm::geometry::direction_to(&x, &xi).unwrap();
    let w = exp_map(&x, &v, 1.5).unwrap();
    assert!((martin_kernel(s, &x, &w, &xi).unwrap() - 3.0f64.exp()).abs() < 1e-10);
}

#[test]
fn martin_kernel_is_harmonic() {
    // Laplacian as the sum of second derivatives along geodesics of an orthonormal frame.
    for d in [2, 3] {
        let s = sf(d, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9 + d as u64);
        for _ in 0..20 {
            let x = random_point(&mut rng, d, 1.0, 1.0);
            let y = random_point(&mut rng, d, 1.0, 1.5);
            let xi = random_boundary(&mut rng, d);
            let k = |p: &HPoint| martin_kernel(s, &x, p, &xi).unwrap();
            let h = 1e-3;
            let k0 = k(&y);
            let mut lap = 0.0;
            for e in y.tangent_frame() {
                let plus = exp_map(&y, &e, h).unwrap();
                let minus = exp_map(&y, &e, -h).unwrap();
                lap += (k(&plus) - 2.0 * k0 + k(&minus)) / (h * h);
            }
            assert!(lap.abs() / k0 <= 1e-4, "d = {d}: residual {}", lap / k0);
        }
    }
}

#[test]
fn chapman_kolmogorov_in_three_dimensions() {
    let s = sf(3, 1.0);
    for r in [0.0f64, 0.7, 2.0] {
        // p(1, r) = int p(1/2, rho) p(1/2, D(rho, c)) sinh^2(rho) 2 pi dc d rho
        let inner = |rho: f64| {
            let f = |c: f64| {
                let ch = r.cosh() * rho.cosh() - r.sinh() * rho.sinh() * c;
                let dist = ch.max(1.0).acosh();
                heat_kernel(s, 0.5, dist).unwrap()
            };
            let v = quad::integrate(f, -1.0, 1.0, 1e-18, 1e-11).unwrap().value;
            2.0 * PI * rho.sinh().powi(2) * heat_kernel(s, 0.5, rho).unwrap() * v
        };
        let total = quad::integrate_with_breaks(inner, &[0.0, 1.0, 3.0, 6.0, 14.0], 1e-16, 1e-10).unwrap().value;
        let direct = heat_kernel(s, 1.0, r).unwrap();
        assert!((total - direct).abs() <= 1e-4 * direct, "r = {r}: {total} vs {direct}");
    }
}

#[test]
fn comparison_monotonicity() {
    let ts: Vec<f64> = (0..=20).map(|i| 0.1 * (100.0f64).powf(i as f64 / 20.0)).collect();
    let rs: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
    let same = comparison_check(1.0, 1.0, 3, &ts, &rs).unwrap();
    assert!(same.pass() && same.max_log_excess == 0.0);
    let r3 = comparison_check(1.0, 1.5, 3, &ts, &rs).unwrap();
    assert!(r3.pass(), "{r3:?}");
    let r2 = comparison_check(1.0, 2.0, 2, &ts, &rs).unwrap();
    assert!(r2.pass(), "{r2:?}");
    assert!(comparison_check(2.0, 1.0, 2, &ts, &rs).is_err());
}

#[test]
fn gaussian_bound_constant_is_finite() {
    let rep = gaussian_bound_diagnostic(sf(3, 1.0)).unwrap();
    assert!(rep.c_fit.is_finite() && rep.c_fit > 0.0);
    assert!(rep.max_ratio_diagonal.is_finite());
    // kernel / bound grows linearly in t at fixed r for d = 3
    assert!((rep.slope_t_at_r1 - 1.0).abs() < 1e-9, "{}", rep.slope_t_at_r1);
}

#[test]
fn radial_law_table() {
    let law = RadialLaw::new(sf(2, 1.0), 5.0).unwrap();
    assert!((law.mass() - 1.0).abs() < 1e-6);
    assert_eq!(law.cdf(0.0), 0.0);
    assert_eq!(law.cdf(1e6), 1.0);
    // Hermite interpolation against a direct integral at an off-grid point
    let x = 4.321;
    let direct = quad::integrate(|r| radial_density(sf(2, 1.0), 5.0, r).unwrap(), 0.0, x, 1e-14, 1e-11).unwrap().value;
    assert!((law.cdf(x) - direct).abs() < 1e-7);
}
