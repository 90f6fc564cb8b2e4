//! Null calibration of the test statistics and exactness of the reductions.

use hypbm::stats::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Brute-force `sup |F_n - F|` over the sample points and their left limits.
fn ks_brute(v: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = v.len() as f64;
    v.iter()
        .map(|&x| {
            let le = v.iter().filter(|&&y| y <= x).count() as f64 / n;
            let lt = v.iter().filter(|&&y| y < x).count() as f64 / n;
            (le - cdf(x)).abs().max((cdf(x) - lt).abs())
        })
        .fold(0.0, f64::max)
}

fn ecdf(v: &[f64], x: f64) -> f64 {
    v.iter().filter(|&&y| y <= x).count() as f64 / v.len() as f64
}

#[test]
fn ks_rejection_rate_under_the_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = 10_000;
    let reps = 200;
    let rejected = (0..reps).filter(|_| ks_statistic(&normals(&mut rng, m), normal_cdf) > ks_critical_95(m)).count();
    let rate = rejected as f64 / reps as f64;
    assert!((0.02..=0.10).contains(&rate), "{rate}");
}

#[test]
fn ks_statistic_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2, 7, 100, 500] {
        let v = normals(&mut rng, n);
        assert!((ks_statistic(&v, normal_cdf) - ks_brute(&v, normal_cdf)).abs() < 1e-14);
    }
}

#[test]
fn two_sample_ks_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (n, m) in [(10, 13), (200, 150), (50, 50)] {
        let a: Vec<f64> = normals(&mut rng, n).iter().map(|x| (x * 4.0).round()).collect();
        let b: Vec<f64> = normals(&mut rng, m).iter().map(|x| (x * 4.0 + 0.5).round()).collect();
        let brute = a.iter().chain(&b).map(|&x| (ecdf(&a, x) - ecdf(&b, x)).abs()).fold(0.0, f64::max);
        assert!((ks_two_sample(&a, &b) - brute).abs() < 1e-14, "{n} {m}");
    }
}

#[test]
fn normal_cdf_reference_values() {
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-10);
    assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-10);
}

#[test]
fn reductions_ignore_shard_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sample: Sample = (0..1000u64).map(|id| (id, rng.random::<f64>() * 1e6 - 5e5)).collect();
    let reference = EstimateWithCI::from_sample(&sample, Method::Mean).unwrap();
    for _ in 0..10 {
        let mut shuffled = sample.clone();
        shuffled.shuffle(&mut rng);
        let shards: Vec<Sample> = shuffled.chunks(137).map(<[_]>::to_vec).collect();
        let merged = merge_samples(shards);
        let e = EstimateWithCI::from_sample(&merged, Method::Mean).unwrap();
        assert_eq!(e.value.to_bits(), reference.value.to_bits());
        assert_eq!(e.std_error.to_bits(), reference.std_error.to_bits());
    }
}

#[test]
fn pairwise_sum_is_accurate() {
    let v: Vec<f64> = (1..=100_000).map(|k| 1.0 / (k as f64 * k as f64)).collect();
    let exact = std::f64::consts::PI.powi(2) / 6.0 - 1.0 / 100_000.5;
    assert!((pairwise_sum(&v) - exact).abs() < 1e-13);
}

#[test]
fn clt_on_synthetic_gaussian_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (t, center, sigma_sq): (f64, f64, f64) = (200.0, 400.0, 2.0);
    let n = 5000;
    let sample: Sample = normals(&mut rng, n)
        .into_iter()
        .enumerate()
        .map(|(i, z)| (i as u64, center + (sigma_sq * t).sqrt() * z))
        .collect();
    let rep = clt_from_values(&sample, t, center, sigma_sq, 0.03).unwrap();
    assert!(rep.pass);
    assert!(rep.ks_statistic <= ks_critical_95(n) * 1.5, "{}", rep.ks_statistic);
    assert!((rep.sigma_hat_sq - sigma_sq).abs() <= 4.0 * rep.sigma_hat_sq_se, "{rep:?}");
    // the standard error of a Gaussian sample variance is sigma^2 sqrt(2 / n)
    assert!((rep.sigma_hat_sq_se / (sigma_sq * (2.0 / n as f64).sqrt()) - 1.0).abs() < 0.1);

    // a constant shift by 0.1 standard deviations moves KS by about 0.1 phi(0)
    let shifted: Sample = sample.iter().map(|&(i, y)| (i, y + 0.1 * (sigma_sq * t).sqrt())).collect();
    let rep = clt_from_values(&shifted, t, center, sigma_sq, 0.03).unwrap();
    assert!((rep.ks_statistic - 0.1 * 0.3989).abs() < 0.015, "{}", rep.ks_statistic);
}
