//! The modular surface `PSL(2,Z) \ H^2` as a finite-volume quotient.
//!
//! Points of the quotient are represented in the standard fundamental domain
//! `|Re z| <= 1/2, |z| >= 1`. Brownian paths are stepped in reduced
//! coordinates: the half-plane step is applied to the reduced point and the
//! result is reduced again, which is legitimate because the law of the step
//! commutes with isometries. Unit tangent vectors are elements `g` of
//! `SL(2,R)`, read as the image under `g` of the upward unit vector at `i`;
//! the geodesic flow is right multiplication by `diag(e^{t/2}, e^{-t/2})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::halfplane::{self, HalfPlaneBoundary};
use crate::rng::path_rng;
use crate::sampler::{self, halfplane_step, PathSet, Scheme};

/// Iteration cap of the reduction loop.
pub const REDUCE_CAP: u64 = 1_000_000;

const FD_TOL: f64 = 1e-12;

/// Longest flow segment between two reductions.
const FLOW_CHUNK: f64 = 0.5;

/// Hyperbolic area of the modular surface.
pub fn area() -> f64 {
    PI / 3.0
}

/// Point of the standard fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdPoint {
    z: Complex64,
}

impl FdPoint {
    /// Checked constructor; use [`reduce`] to bring an arbitrary point in.
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain(format!("fundamental-domain point needs 0 < Im z < inf, got {z}")));
        }
        if z.re.abs() > 0.5 + FD_TOL || z.norm_sqr() < 1.0 - 2.0 * FD_TOL {
            return Err(Error::domain(format!("{z} is outside the fundamental domain")));
        }
        Ok(FdPoint { z })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// Real Mobius transformation `z -> (a z + b) / (c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Image under an element of determinant one, with `Im` taken from
    /// `Im z / |c z + d|^2` so that it stays positive for large entries.
    pub fn apply_sl2(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        let n2 = den.norm_sqr();
        let re = ((self.a * z + self.b) * den.conj()).re / n2;
        Complex64::new(re, z.im / n2)
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        Mobius {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse, assuming determinant one.
    pub fn inverse(&self) -> Mobius {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    fn renormalized(self) -> Mobius {
        let s = self.det().sqrt();
        Mobius { a: self.a / s, b: self.b / s, c: self.c / s, d: self.d / s }
    }
}

/// Reduce `z` to the fundamental domain; returns the point and the number
/// of group moves (a translation by any integer counts as one move).
pub fn reduce(z: Complex64) -> Result<(FdPoint, u64)> {
    let (p, _, moves) = reduce_with_word(z)?;
    Ok((p, moves))
}

/// As [`reduce`], also returning the element `gamma` with `gamma(z)` reduced.
pub fn reduce_with_word(z: Complex64) -> Result<(FdPoint, Mobius, u64)> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("reduction needs Im z > 0, got {z}")));
    }
    let mut w = z;
    let mut g = Mobius::IDENTITY;
    let mut moves = 0u64;
    loop {
        if moves >= REDUCE_CAP {
            return Err(Error::numeric(format!("reduction of {z} exceeded {REDUCE_CAP} moves")));
        }
        let n = w.re.round();
        if n != 0.0 {
            w.re -= n;
            g = Mobius { a: g.a - n * g.c, b: g.b - n * g.d, c: g.c, d: g.d };
            moves += 1;
        }
        if w.norm_sqr() < 1.0 {
            w = -w.conj() / w.norm_sqr();
            g = Mobius { a: -g.c, b: -g.d, c: g.a, d: g.b };
            moves += 1;
        } else {
            return Ok((FdPoint { z: w }, g, moves));
        }
    }
}

/// Distance in the quotient, by search over group words of bounded length
/// applied to the reduced second point. An upper bound that is exact once
/// the minimizing word is short, which holds for points at moderate distance.
pub fn quotient_distance(z: Complex64, w: Complex64) -> Result<f64> {
    let (zr, _) = reduce(z)?;
    let (wr, _) = reduce(w)?;
    let gens = [
        Mobius { a: 1.0, b: 1.0, c: 0.0, d: 1.0 },
        Mobius { a: 1.0, b: -1.0, c: 0.0, d: 1.0 },
        Mobius { a: 0.0, b: -1.0, c: 1.0, d: 0.0 },
    ];
    let mut best = halfplane::distance(zr.z, wr.z)?;
    let mut frontier = vec![(wr.z, usize::MAX)];
    for _ in 0..6 {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for &(p, last) in &frontier {
            for (k, g) in gens.iter().enumerate() {
                // skip immediate inverses: T after T^-1, S after S
                if (k == 0 && last == 1) || (k == 1 && last == 0) || (k == 2 && last == 2) {
                    continue;
                }
                let q = g.apply(p);
                best = best.min(halfplane::distance(zr.z, q)?);
                next.push((q, k));
            }
        }
        frontier = next;
    }
    Ok(best)
}

/// Partition of the fundamental domain into an arc cell (`Im z < 1`),
/// `rows x cols` rectangles in `(Re z, ln Im z)` between `Im z = 1` and
/// `y_cap`, and a cusp cell `Im z >= y_cap`. Row boundaries are equally
/// spaced in `1/y`, so all rectangles have the same area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub y_cap: f64,
    pub rows: usize,
    pub cols: usize,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { y_cap: 4.0, rows: 3, cols: 6 }
    }
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_cap > 1.0 && self.y_cap.is_finite()) || self.rows == 0 || self.cols == 0 {
            return Err(Error::config(format!(
                "partition needs y_cap > 1 and at least one row and column, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols + 2
    }

    /// Hyperbolic area per cell, in cell order: arc, rectangles row by row
    /// from the bottom, cusp.
    pub fn areas(&self) -> Vec<f64> {
        let rect = (1.0 - 1.0 / self.y_cap) / (self.rows * self.cols) as f64;
        let mut a = Vec::with_capacity(self.n_cells());
        a.push(area() - 1.0);
        a.extend(std::iter::repeat_n(rect, self.rows * self.cols));
        a.push(1.0 / self.y_cap);
        a
    }

    /// Areas divided by the total area.
    pub fn weights(&self) -> Vec<f64> {
        self.areas().into_iter().map(|a| a / area()).collect()
    }

    pub fn cell_of(&self, p: &FdPoint) -> usize {
        let (x, y) = (p.z.re, p.z.im);
        if y < 1.0 {
            return 0;
        }
        if y >= self.y_cap {
            return self.n_cells() - 1;
        }
        let s = (1.0 - 1.0 / y) / (1.0 - 1.0 / self.y_cap);
        let row = ((s * self.rows as f64) as usize).min(self.rows - 1);
        let col = (((x + 0.5) * self.cols as f64).max(0.0) as usize).min(self.cols - 1);
        1 + row * self.cols + col
    }
}

/// Total-variation distance `1/2 sum |p_k - w_k|`.
pub fn total_variation(p: &[f64], w: &[f64]) -> f64 {
    0.5 * p.iter().zip(w).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Brownian motion on the modular surface, with an optional lift to the
/// half-plane tracked as `lift = g(reduced)`.
#[derive(Debug, Clone)]
pub struct QuotientWalker<R: Rng> {
    state: [f64; 2],
    lift: Option<Mobius>,
    start: Complex64,
    dt: f64,
    rng: R,
}

impl QuotientWalker<rand_chacha::ChaCha8Rng> {
    pub fn new(start: FdPoint, dt: f64, master_seed: u64, path_id: u64, track_lift: bool) -> Result<Self> {
        if !(dt > 0.0 && dt <= sampler::MAX_DT) {
            return Err(Error::config(format!("dt must lie in (0, {}], got {dt}", sampler::MAX_DT)));
        }
        Ok(QuotientWalker {
            state: [start.z.re, start.z.im.ln()],
            lift: track_lift.then_some(Mobius::IDENTITY),
            start: start.z,
            dt,
            rng: path_rng(master_seed, path_id),
        })
    }
}

impl<R: Rng> QuotientWalker<R> {
    pub fn point(&self) -> FdPoint {
        FdPoint { z: Complex64::new(self.state[0], self.state[1].exp()) }
    }

    pub fn step(&mut self) -> Result<()> {
        let g1: f64 = self.rng.sample(StandardNormal);
        let g2: f64 = self.rng.sample(StandardNormal);
        halfplane_step(&mut self.state, self.dt, g1, g2);
        let z = Complex64::new(self.state[0], self.state[1].exp());
        if z.re.abs() <= 0.5 && z.norm_sqr() >= 1.0 {
            return Ok(());
        }
        let (p, gamma, _) = reduce_with_word(z)?;
        self.state = [p.z.re, p.z.im.ln()];
        if let Some(l) = self.lift.as_mut() {
            *l = l.compose(&gamma.inverse());
        }
        Ok(())
    }

    pub fn advance(&mut self, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step()?;
        }
        Ok(())
    }

    /// Distance in the half-plane from the start to the lifted position.
    pub fn lift_distance(&self) -> Option<f64> {
        self.lift.map(|g| {
            let s = g.inverse().apply_sl2(self.start);
            let z = self.point().z;
            halfplane::distance_log(s.re, s.im.ln(), z.re, z.im.ln())
        })
    }
}

/// Total-variation series of the cell histogram against normalized areas.
#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub t: Vec<f64>,
    pub tv: Vec<f64>,
    /// Monte Carlo noise floor `sqrt(cells / N) / 2`.
    pub noise_floor: f64,
    pub n_paths: usize,
    /// Least-squares slope of `-ln TV` over points with `TV > 3 noise_floor`
    /// and `t > 0`; `None` when fewer than three qualify.
    pub fitted_rate: Option<f64>,
}

impl MixingReport {
    /// TV never rises by more than `slack` between grid points with `t >= t_from`.
    pub fn monotone_from(&self, t_from: f64, slack: f64) -> bool {
        let idx: Vec<usize> = (0..self.t.len()).filter(|&i| self.t[i] >= t_from).collect();
        idx.windows(2).all(|w| self.tv[w[1]] <= self.tv[w[0]] + slack)
    }

    pub fn tv_at(&self, t: f64) -> Option<f64> {
        self.t.iter().position(|&s| (s - t).abs() < 1e-9).map(|i| self.tv[i])
    }
}

fn grid_steps(t_grid: &[f64], dt: f64) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k = (t / dt).round();
        if !(t >= 0.0) || (k * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::config(format!("grid time {t} is not a non-negative multiple of dt = {dt}")));
        }
        if out.last().is_some_and(|&prev| prev >= k as usize) {
            return Err(Error::config("time grid must be strictly increasing"));
        }
        out.push(k as usize);
    }
    Ok(out)
}

/// Simulate `n_paths` paths from `start` and compare the cell histogram at
/// each grid time with the normalized areas.
pub fn mixing_tv(
    t_grid: &[f64],
    n_paths: usize,
    partition: &PartitionSpec,
    start: FdPoint,
    dt: f64,
    master_seed: u64,
) -> Result<MixingReport> {
    partition.validate()?;
    if n_paths < 10_000 {
        return Err(Error::config(format!("mixing needs at least 10^4 paths, got {n_paths}")));
    }
    let steps = grid_steps(t_grid, dt)?;
    let cells: Vec<Vec<u16>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|id| {
            let mut w = QuotientWalker::new(start, dt, master_seed, id, false)?;
            let mut done = 0usize;
            let mut out = Vec::with_capacity(steps.len());
            for &k in &steps {
                w.advance(k - done)?;
                done = k;
                out.push(partition.cell_of(&w.point()) as u16);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let weights = partition.weights();
    let n = n_paths as f64;
    let tv: Vec<f64> = (0..steps.len())
        .map(|j| {
            let mut counts = vec![0u64; partition.n_cells()];
            for c in &cells {
                counts[c[j] as usize] += 1;
            }
            let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
            total_variation(&p, &weights)
        })
        .collect();
    let noise_floor = 0.5 * (partition.n_cells() as f64 / n).sqrt();
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&tv)
        .filter(|(&t, &v)| t > 0.0 && v > 3.0 * noise_floor)
        .map(|(&t, &v)| (t, -v.ln()))
        .collect();
    let fitted_rate = (pts.len() >= 3).then(|| slope(&pts));
    Ok(MixingReport { t: t_grid.to_vec(), tv, noise_floor, n_paths, fitted_rate })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Cell frequencies of a single path sampled every `sample_every` time units
/// on `(0, t_end]`.
pub fn occupation_frequencies(
    partition: &PartitionSpec,
    start: FdPoint,
    t_end: f64,
    dt: f64,
    sample_every: f64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    partition.validate()?;
    let per = (sample_every / dt).round() as usize;
    if per == 0 || !(t_end >= sample_every) {
        return Err(Error::config("occupation sampling needs dt <= sample_every <= t_end"));
    }
    let n = (t_end / sample_every).floor() as usize;
    let mut w = QuotientWalker::new(start, dt, master_seed, 0, false)?;
    let mut counts = vec![0u64; partition.n_cells()];
    for _ in 0..n {
        w.advance(per)?;
        counts[partition.cell_of(&w.point())] += 1;
    }
    Ok(counts.iter().map(|&c| c as f64 / n as f64).collect())
}

/// Unit tangent vector, stored as the `SL(2,R)` element carrying the upward
/// unit vector at `i` to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTangent {
    g: Mobius,
}

impl UnitTangent {
    /// Vector at `z` making angle `angle` with the positive real direction.
    pub fn new(z: Complex64, angle: f64) -> Result<Self> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::domain(format!("tangent base needs Im z > 0, got {z}")));
        }
        let s = z.im.sqrt();
        let affine = Mobius { a: s, b: z.re / s, c: 0.0, d: 1.0 / s };
        Ok(UnitTangent { g: affine.compose(&rotation(PI / 2.0 - angle)) })
    }

    /// Vector at `z` pointing along the geodesic towards the boundary point `xi`.
    pub fn toward(z: Complex64, xi: HalfPlaneBoundary) -> Result<Self> {
        let base = UnitTangent::new(z, PI / 2.0)?;
        let theta = match xi {
            HalfPlaneBoundary::Infinity => 0.0,
            HalfPlaneBoundary::Real(t) => {
                let u = base.g.inverse().apply(Complex64::new(t, 0.0)).re;
                2.0 * 1.0f64.atan2(u)
            }
        };
        Ok(UnitTangent { g: base.g.compose(&rotation(theta)) })
    }

    pub fn base(&self) -> Complex64 {
        self.g.apply(Complex64::i())
    }

    /// Angle with the positive real direction, in `(-pi, pi]`.
    pub fn angle(&self) -> f64 {
        let w = Complex64::new(self.g.d, self.g.c);
        let a = PI / 2.0 - 2.0 * w.arg();
        let r = a.rem_euclid(2.0 * PI);
        if r > PI {
            r - 2.0 * PI
        } else {
            r
        }
    }

    /// Exact geodesic flow in the half-plane, without reduction.
    pub fn flow(&self, t: f64) -> UnitTangent {
        let e = (0.5 * t).exp();
        let g = self.g;
        UnitTangent { g: Mobius { a: g.a * e, b: g.b / e, c: g.c * e, d: g.d / e } }
    }

    /// Move the base point into the fundamental domain.
    pub fn reduced(&self) -> Result<UnitTangent> {
        let (_, gamma, _) = reduce_with_word(self.base())?;
        Ok(UnitTangent { g: gamma.compose(&self.g).renormalized() })
    }
}

/// Rotation about `i` turning tangent directions there clockwise by `theta`.
fn rotation(theta: f64) -> Mobius {
    let (s, c) = (0.5 * theta).sin_cos();
    Mobius { a: c, b: -s, c: s, d: c }
}

/// Geodesic flow on the unit tangent bundle of the modular surface: flows
/// in segments of at most half a unit and reduces after each.
pub fn geodesic_flow_reduce(v: &UnitTangent, t: f64) -> Result<UnitTangent> {
    let n = (t.abs() / FLOW_CHUNK).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let mut u = v.reduced()?;
    for _ in 0..n {
        u = u.flow(h).reduced()?;
    }
    Ok(u)
}

/// Time average of `phi` along the quotient geodesic through a start point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BirkhoffAverage {
    pub value: f64,
    pub t_flow: f64,
    /// Confidence flag of the boundary limit the geodesic aims at.
    pub confident: bool,
}

/// Average of `phi` over `[0, t_flow)` along the geodesic from `start`
/// towards `xi`, sampled every `ds` with reduction after each sample.
pub fn birkhoff_average(
    start: Complex64,
    xi: HalfPlaneBoundary,
    phi: impl Fn(Complex64) -> f64,
    t_flow: f64,
    ds: f64,
) -> Result<f64> {
    if !(t_flow > 0.0 && ds > 0.0 && ds <= FLOW_CHUNK) {
        return Err(Error::config(format!("need t_flow > 0 and 0 < ds <= {FLOW_CHUNK}")));
    }
    let n = (t_flow / ds).round().max(1.0) as usize;
    let mut u = UnitTangent::toward(start, xi)?.reduced()?;
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        vals.push(phi(u.base()));
        u = u.flow(ds).reduced()?;
    }
    Ok(crate::stats::pairwise_sum(&vals) / n as f64)
}

/// Birkhoff average along the geodesic from the start of a half-plane path
/// towards the path's boundary limit.
pub fn birkhoff_equidistribution(
    set: &PathSet,
    path: &sampler::Path,
    phi: impl Fn(Complex64) -> f64,
    t_flow: f64,
    ds: f64,
) -> Result<BirkhoffAverage> {
    if set.spec.scheme != Scheme::HalfPlaneExact {
        return Err(Error::Unsupported("equidistribution reads half-plane paths".into()));
    }
    let est = sampler::boundary_limit(set, path)?;
    let xi = est.halfplane.ok_or_else(|| Error::numeric("half-plane path without a half-plane limit"))?;
    let s = path.state(0);
    let start = Complex64::new(s[0], s[1].exp());
    let value = birkhoff_average(start, xi, phi, t_flow, ds)?;
    Ok(BirkhoffAverage { value, t_flow, confident: est.confident })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduce_examples() {
        let (p, m) = reduce(Complex64::i()).unwrap();
        assert_eq!((p.z(), m), (Complex64::i(), 0));
        let (p, m) = reduce(Complex64::new(5.0, 1.0)).unwrap();
        assert!((p.z() - Complex64::i()).norm() < 1e-15 && m == 1);
        let (p, m) = reduce(Complex64::new(0.3, 0.001)).unwrap();
        assert!(m > 1);
        assert!(FdPoint::new(p.z()).is_ok());
        let (q, m2) = reduce(p.z()).unwrap();
        assert_eq!((q, m2), (p, 0));
        assert!(reduce(Complex64::new(0.0, -1.0)).is_err());
    }

    #[test]
    fn word_maps_point_to_reduction() {
        for z in [Complex64::new(0.3, 0.001), Complex64::new(-7.2, 0.04), Complex64::new(0.49, 0.5)] {
            let (p, g, _) = reduce_with_word(z).unwrap();
            assert!((g.det() - 1.0).abs() < 1e-9);
            assert!((g.apply(z) - p.z()).norm() < 1e-9 * p.z().norm());
        }
    }

    #[test]
    fn partition_areas_and_cells() {
        let part = PartitionSpec::default();
        assert_eq!(part.n_cells(), 20);
        assert!((part.areas().iter().sum::<f64>() - area()).abs() < 1e-12);
        let p = |x: f64, y: f64| FdPoint::new(Complex64::new(x, y)).unwrap();
        assert_eq!(part.cell_of(&p(0.45, 0.95)), 0);
        assert_eq!(part.cell_of(&p(-0.5, 1.0)), 1);
        assert_eq!(part.cell_of(&p(0.5, 3.99)), 18);
        assert_eq!(part.cell_of(&p(0.0, 4.0)), 19);
    }

    #[test]
    fn delta_start_has_maximal_tv() {
        let part = PartitionSpec::default();
        let start = FdPoint::new(Complex64::i()).unwrap();
        let w = part.weights();
        let mut p = vec![0.0; part.n_cells()];
        let k = part.cell_of(&start);
        p[k] = 1.0;
        assert!((total_variation(&p, &w) - (1.0 - w[k])).abs() < 1e-15);
    }

    #[test]
    fn vertical_geodesic_and_angles() {
        let v = UnitTangent::new(Complex64::i(), PI / 2.0).unwrap();
        let u = v.flow(2f64.ln());
        assert!((u.base() - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((u.angle() - PI / 2.0).abs() < 1e-15);
        for ang in [-3.0, -1.0, 0.0, 0.4, 2.5] {
            let z = Complex64::new(0.2, 1.7);
            let w = UnitTangent::new(z, ang).unwrap();
            assert!((w.base() - z).norm() < 1e-14 && (w.angle() - ang).abs() < 1e-14);
        }
    }

    #[test]
    fn toward_hits_the_boundary_point() {
        for xi in [-3.0, -0.2, 0.0, 0.7, 12.0] {
            let v = UnitTangent::toward(Complex64::new(0.3, 0.8), HalfPlaneBoundary::Real(xi)).unwrap();
            let far = v.flow(40.0).base();
            assert!((far.re - xi).abs() < 1e-6 && far.im < 1e-6, "{xi}: {far}");
        }
        let v = UnitTangent::toward(Complex64::new(0.3, 0.8), HalfPlaneBoundary::Infinity).unwrap();
        assert!((v.angle() - PI / 2.0).abs() < 1e-15);
    }
}
