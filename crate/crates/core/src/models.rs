//! Riemannian models in geodesic polar coordinates about a pole.
//!
//! Two families are supported:
//! - constant curvature H^d(-a^2), metric `dr^2 + (sinh(ar)/a)^2 g_S`;
//! - rotationally symmetric surfaces `dr^2 + f(r)^2 dtheta^2` with a warp
//!   function tabulated on a grid and interpolated by a clamped cubic spline.
//!
//! Under the generator `Delta` the radial process solves
//! `dr = m'(r)/m(r) dt + sqrt(2) dW` where `m` is the volume density, so the
//! radial diffusion coefficient is `sqrt(2)` and `radial_drift` is the full
//! radial part of the Laplacian.

use std::path::Path as FsPath;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Pinching tolerance applied to finite-difference curvature on the grid.
pub const PINCH_EPS: f64 = 1e-4;

/// Default cap on the radius for warped models.
pub const DEFAULT_R_MAX: f64 = 1e3;

/// H^d(-a^2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub dim: usize,
    pub a: f64,
}

impl SpaceForm {
    pub fn new(dim: usize, a: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::param(format!("dimension must be >= 2, got {dim}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::param(format!("curvature parameter must be positive, got {a}")));
        }
        Ok(SpaceForm { dim, a })
    }

    /// Volume growth exponent `(d-1) a`.
    pub fn growth(&self) -> f64 {
        (self.dim - 1) as f64 * self.a
    }
}

/// `ln sinh(x)` for `x > 0` without overflow.
pub(crate) fn ln_sinh(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Warp function on a grid with clamped cubic-spline interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpGrid {
    r: Vec<f64>,
    f: Vec<f64>,
    // spline second derivatives at the nodes
    m: Vec<f64>,
    uniform_h: Option<f64>,
}

impl WarpGrid {
    /// Build from nodes. Requires `r` strictly increasing from 0, `f(0) = 0`,
    /// `f > 0` elsewhere and a data slope at the pole consistent with `f'(0) = 1`.
    pub fn new(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if r.len() != f.len() {
            return Err(Error::config("warp grid columns have different lengths"));
        }
        if r.len() < 4 {
            return Err(Error::config("warp grid needs at least 4 nodes"));
        }
        if r[0] != 0.0 {
            return Err(Error::config("warp grid must start at r = 0"));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("warp grid radii must be strictly increasing"));
        }
        if f[0].abs() > 1e-12 {
            return Err(Error::config(format!("warp function must vanish at the pole, f(0) = {}", f[0])));
        }
        if let Some(i) = f.iter().skip(1).position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::config(format!("warp function not positive at r = {}", r[i + 1])));
        }
        // f(r)/r = 1 + O(r^2): extrapolate in r^2 from the first two nodes.
        let (g1, g2) = (f[1] / r[1], f[2] / r[2]);
        let (s1, s2) = (r[1] * r[1], r[2] * r[2]);
        let slope0 = (s2 * g1 - s1 * g2) / (s2 - s1);
        if (slope0 - 1.0).abs() > 1e-3 {
            return Err(Error::config(format!("warp function slope at the pole is {slope0}, expected 1")));
        }
        let n = r.len() - 1;
        // Right-end slope from the cubic through the last four nodes.
        let slope_n = lagrange_slope_at_last(&r[n - 3..], &f[n - 3..]);
        let m = clamped_spline(&r, &f, 1.0, slope_n);
        let h0 = r[1] - r[0];
        let uniform = r.windows(2).all(|w| ((w[1] - w[0]) - h0).abs() <= 1e-9 * h0);
        Ok(WarpGrid { r, f, m, uniform_h: uniform.then_some(h0) })
    }

    /// Parse the two-column text format: `r f(r)` per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut f = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::config(format!("warp grid line {}: expected 2 columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::config(format!("warp grid line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        Self::new(r, f)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# r f(r)\n");
        for (r, f) in self.r.iter().zip(&self.f) {
            s.push_str(&format!("{r:.17e} {f:.17e}\n"));
        }
        s
    }

    /// Sample a closed-form warp function on a uniform grid of `n` intervals.
    pub fn from_fn(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> Result<Self> {
        let h = r_max / n as f64;
        let r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let v = r.iter().map(|&x| f(x)).collect();
        Self::new(r, v)
    }

    /// Solve `f'' = k2(r) f`, `f(0) = 0`, `f'(0) = 1` by RK4 on a uniform grid;
    /// the sectional curvature of the resulting surface is `-k2(r)`.
    pub fn from_curvature(k2: impl Fn(f64) -> f64, r_max: f64, n: usize) -> Result<Self> {
        let h = r_max / n as f64;
        let mut r = Vec::with_capacity(n + 1);
        let mut f = Vec::with_capacity(n + 1);
        let (mut y, mut yp) = (0.0f64, 1.0f64);
        for i in 0..=n {
            let x = i as f64 * h;
            r.push(x);
            f.push(y);
            let k1 = (yp, k2(x) * y);
            let (y2, p2) = (y + 0.5 * h * k1.0, yp + 0.5 * h * k1.1);
            let k2v = (p2, k2(x + 0.5 * h) * y2);
            let (y3, p3) = (y + 0.5 * h * k2v.0, yp + 0.5 * h * k2v.1);
            let k3 = (p3, k2(x + 0.5 * h) * y3);
            let (y4, p4) = (y + h * k3.0, yp + h * k3.1);
            let k4 = (p4, k2(x + h) * y4);
            y += h / 6.0 * (k1.0 + 2.0 * k2v.0 + 2.0 * k3.0 + k4.0);
            yp += h / 6.0 * (k1.1 + 2.0 * k2v.1 + 2.0 * k3.1 + k4.1);
        }
        Self::new(r, f)
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("non-empty grid")
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.r, &self.f)
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.r.len() - 1;
        let i = match self.uniform_h {
            Some(h) => (x / h) as usize,
            None => self.r.partition_point(|&ri| ri <= x).saturating_sub(1),
        };
        i.min(n - 1)
    }

    /// Spline value and first derivative at `x` (caller checks the range).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.interval(x);
        let (x0, x1) = (self.r[i], self.r[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - x, x - x0);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let c0 = self.f[i] / h - m0 * h / 6.0;
        let c1 = self.f[i + 1] / h - m1 * h / 6.0;
        let v = m0 * a * a * a / (6.0 * h) + m1 * b * b * b / (6.0 * h) + c0 * a + c1 * b;
        let dv = -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) - c0 + c1;
        (v, dv)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }
}

fn lagrange_slope_at_last(x: &[f64], y: &[f64]) -> f64 {
    // derivative at x[3] of the cubic interpolant through 4 points
    let t = x[3];
    let mut s = 0.0;
    for j in 0..4 {
        // d/dt of L_j(t) at t = x[3]
        let mut denom = 1.0;
        for m in 0..4 {
            if m != j {
                denom *= x[j] - x[m];
            }
        }
        let mut num = 0.0;
        for k in 0..4 {
            if k == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..4 {
                if m != j && m != k {
                    prod *= t - x[m];
                }
            }
            num += prod;
        }
        s += y[j] * num / denom;
    }
    s
}

fn clamped_spline(x: &[f64], y: &[f64], slope0: f64, slope_n: f64) -> Vec<f64> {
    let n = x.len() - 1;
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sub = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut sup = vec![0.0; n + 1];
    let mut rhs = vec![0.0; n + 1];
    diag[0] = 2.0 * h[0];
    sup[0] = h[0];
    rhs[0] = 6.0 * ((y[1] - y[0]) / h[0] - slope0);
    for i in 1..n {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    sub[n] = h[n - 1];
    diag[n] = 2.0 * h[n - 1];
    rhs[n] = 6.0 * (slope_n - (y[n] - y[n - 1]) / h[n - 1]);
    // Thomas algorithm
    for i in 1..=n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut m = vec![0.0; n + 1];
    m[n] = rhs[n] / diag[n];
    for i in (0..n).rev() {
        m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
    }
    m
}

/// Grid diagnostics of a warped surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchingReport {
    /// Smallest finite-difference `f''/f` over interior nodes (minus sectional curvature).
    pub min_curvature: f64,
    pub max_curvature: f64,
    /// Nodes where `a coth(a r) <= f'/f <= b coth(b r)` fails.
    pub sandwich_violations: usize,
    pub max_sandwich_excess: f64,
    /// Largest finite-difference slope of the curvature, reported only.
    pub curvature_gradient_bound: f64,
}

/// Rotationally symmetric surface `dr^2 + f(r)^2 dtheta^2` pinched between
/// `-b^2` and `-a^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpSurface {
    grid: WarpGrid,
    a: f64,
    b: f64,
    r_max: f64,
    report: PinchingReport,
}

impl WarpSurface {
    pub fn new(grid: WarpGrid, a: f64, b: f64) -> Result<Self> {
        Self::with_r_max(grid, a, b, DEFAULT_R_MAX)
    }

    /// `r_max` is capped at the end of the grid.
    pub fn with_r_max(grid: WarpGrid, a: f64, b: f64, r_max: f64) -> Result<Self> {
        if !(a > 0.0 && b >= a && b.is_finite()) {
            return Err(Error::param(format!("pinching bounds need 0 < a <= b, got a = {a}, b = {b}")));
        }
        let (r, f) = (&grid.r, &grid.f);
        let n = r.len() - 1;
        let mut min_k = f64::INFINITY;
        let mut max_k = f64::NEG_INFINITY;
        let mut curv = Vec::with_capacity(n);
        for i in 1..n {
            let (h0, h1) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let d2 = 2.0 * (h0 * f[i + 1] - (h0 + h1) * f[i] + h1 * f[i - 1]) / (h0 * h1 * (h0 + h1));
            let k = d2 / f[i];
            min_k = min_k.min(k);
            max_k = max_k.max(k);
            curv.push((r[i], k));
            if k < a * a - PINCH_EPS || k > b * b + PINCH_EPS {
                return Err(Error::config(format!(
                    "pinching violated at r = {}: -K = f''/f = {k}, declared range [{}, {}]",
                    r[i],
                    a * a,
                    b * b
                )));
            }
        }
        let curvature_gradient_bound = curv
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max);
        let mut sandwich_violations = 0;
        let mut max_sandwich_excess = 0.0f64;
        for i in 1..=n {
            let x = r[i];
            let ratio = grid.derivative(x) / f[i];
            let lo = a / (a * x).tanh();
            let hi = b / (b * x).tanh();
            let excess = (lo - ratio).max(ratio - hi) / ratio;
            if excess > 1e-6 {
                sandwich_violations += 1;
            }
            max_sandwich_excess = max_sandwich_excess.max(excess);
        }
        let r_max = r_max.min(grid.r_max());
        Ok(WarpSurface {
            grid,
            a,
            b,
            r_max,
            report: PinchingReport {
                min_curvature: min_k,
                max_curvature: max_k,
                sandwich_violations,
                max_sandwich_excess,
                curvature_gradient_bound,
            },
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn grid(&self) -> &WarpGrid {
        &self.grid
    }

    pub fn report(&self) -> &PinchingReport {
        &self.report
    }

    fn check(&self, r: f64) -> Result<()> {
        if r > self.r_max {
            return Err(Error::Range { r, r_max: self.r_max });
        }
        if !(r >= 0.0) {
            return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(())
    }
}

/// A curvature profile oscillating inside `[-b^2, -a^2]`, used as the default
/// variable-curvature example: `k2(r) = a^2 + (b^2 - a^2) (1 + sin r) / 2`.
pub fn oscillating_profile(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |r: f64| a * a + (b * b - a * a) * 0.5 * (1.0 + r.sin())
}

/// The model in force.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    ConstantCurvature(SpaceForm),
    RotSym(Arc<WarpSurface>),
}

/// Point in geodesic polar coordinates about the pole.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    /// Unit vector in R^d; for surfaces `(cos theta, sin theta)`.
    pub dir: Vec<f64>,
}

impl PolarPoint {
    pub fn planar(r: f64, theta: f64) -> Self {
        PolarPoint { r, dir: vec![theta.cos(), theta.sin()] }
    }

    pub fn new(r: f64, dir: Vec<f64>) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::domain("polar radius must be nonnegative"));
        }
        let n: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::Normalization("polar direction must be nonzero".into()));
        }
        Ok(PolarPoint { r, dir: dir.into_iter().map(|x| x / n).collect() })
    }

    /// Angle for surfaces.
    pub fn theta(&self) -> f64 {
        self.dir[1].atan2(self.dir[0])
    }

    /// `sin^2` of half the angle between the two directions, from the chord.
    fn half_angle_sin_sq(&self, other: &PolarPoint) -> f64 {
        let c: f64 = self.dir.iter().zip(&other.dir).map(|(p, q)| (p - q).powi(2)).sum();
        (c / 4.0).min(1.0)
    }

    fn angle_to(&self, other: &PolarPoint) -> f64 {
        2.0 * self.half_angle_sin_sq(other).sqrt().asin()
    }
}

impl ModelSpec {
    pub fn constant(dim: usize, a: f64) -> Result<Self> {
        Ok(ModelSpec::ConstantCurvature(SpaceForm::new(dim, a)?))
    }

    pub fn rotsym(surface: WarpSurface) -> Self {
        ModelSpec::RotSym(Arc::new(surface))
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::ConstantCurvature(s) => s.dim,
            ModelSpec::RotSym(_) => 2,
        }
    }

    pub fn space_form(&self) -> Option<SpaceForm> {
        match self {
            ModelSpec::ConstantCurvature(s) => Some(*s),
            ModelSpec::RotSym(_) => None,
        }
    }

    pub fn r_max(&self) -> f64 {
        match self {
            ModelSpec::ConstantCurvature(_) => f64::INFINITY,
            ModelSpec::RotSym(w) => w.r_max,
        }
    }

    /// Density `A(r)` of the volume in polar coordinates, `dvol = A(r) dr dvol_S`.
    pub fn volume_density(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
        }
        match self {
            ModelSpec::ConstantCurvature(s) => {
                Ok(((s.a * r).sinh() / s.a).powi(s.dim as i32 - 1))
            }
            ModelSpec::RotSym(w) => {
                w.check(r)?;
                Ok(w.grid.value(r))
            }
        }
    }

    /// `ln A(r)` for `r > 0`, finite for radii where `A` overflows.
    pub fn log_volume_density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Singularity("log volume density at the pole".into()));
        }
        match self {
            ModelSpec::ConstantCurvature(s) => {
                Ok((s.dim - 1) as f64 * (ln_sinh(s.a * r) - s.a.ln()))
            }
            ModelSpec::RotSym(w) => {
                w.check(r)?;
                Ok(w.grid.value(r).ln())
            }
        }
    }

    /// Radial part of the Laplacian, `A'(r)/A(r)`.
    pub fn radial_drift(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Err(Error::Singularity("radial drift at the pole".into()));
        }
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {r}")));
        }
        match self {
            ModelSpec::ConstantCurvature(s) => Ok((s.dim - 1) as f64 * s.a / (s.a * r).tanh()),
            ModelSpec::RotSym(w) => {
                w.check(r)?;
                let (f, fp) = w.grid.eval(r);
                Ok(fp / f)
            }
        }
    }

    /// Rate of the spherical component, `1 / s(r)^2` with `s` the warp function.
    pub fn angular_rate(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Err(Error::Singularity("angular rate at the pole".into()));
        }
        if !(r > 0.0) {
            return Err(Error::domain(format!("radius must be positive, got {r}")));
        }
        match self {
            ModelSpec::ConstantCurvature(s) => {
                let sh = (s.a * r).sinh() / s.a;
                Ok(1.0 / (sh * sh))
            }
            ModelSpec::RotSym(w) => {
                w.check(r)?;
                let f = w.grid.value(r);
                Ok(1.0 / (f * f))
            }
        }
    }

    /// `radial_drift(r) - (d-1)/r`: the smooth part of the drift left after
    /// removing the flat Bessel term; extends continuously by 0 to the pole.
    pub fn drift_remainder(&self, r: f64) -> Result<f64> {
        match self {
            ModelSpec::ConstantCurvature(s) => {
                let x = s.a * r;
                let k = (s.dim - 1) as f64;
                if x < 1e-3 {
                    Ok(k * s.a * x / 3.0 * (1.0 - x * x / 15.0))
                } else {
                    Ok(k * (s.a / x.tanh() - 1.0 / r))
                }
            }
            ModelSpec::RotSym(w) => {
                w.check(r)?;
                if r < 1e-9 {
                    return Ok(0.0);
                }
                let (f, fp) = w.grid.eval(r);
                Ok(fp / f - 1.0 / r)
            }
        }
    }

    /// Distance between two points in polar coordinates about the pole.
    pub fn polar_distance(&self, p: &PolarPoint, q: &PolarPoint) -> Result<f64> {
        if p.dir.len() != self.dim() || q.dir.len() != self.dim() {
            return Err(Error::param("polar direction has the wrong dimension"));
        }
        match self {
            ModelSpec::ConstantCurvature(s) => Ok(space_form_polar_distance(*s, p, q)),
            ModelSpec::RotSym(_) => rotsym_distance(self, p, q),
        }
    }
}

/// Law of cosines in the form `cosh(ad) = cosh(a(r1 - r2)) + 2 sinh(a r1) sinh(a r2) sin^2(theta/2)`,
/// evaluated in log space when the terms overflow.
fn space_form_polar_distance(s: SpaceForm, p: &PolarPoint, q: &PolarPoint) -> f64 {
    let a = s.a;
    let s2 = p.half_angle_sin_sq(q);
    let dr = (p.r - q.r).abs();
    if s2 == 0.0 || p.r == 0.0 || q.r == 0.0 {
        return if s2 == 0.0 { dr } else { p.r.max(q.r) };
    }
    let (x, y) = (a * p.r, a * q.r);
    if x + y < 600.0 {
        let excess = 2.0 * (0.5 * a * dr).sinh().powi(2) + 2.0 * x.sinh() * y.sinh() * s2;
        return crate::geometry::acosh1p(excess) / a;
    }
    let ln_cross = std::f64::consts::LN_2 + ln_sinh(x) + ln_sinh(y) + s2.ln();
    let ln_cosh = if a * dr > 0.0 {
        a * dr - std::f64::consts::LN_2 + (-2.0 * a * dr).exp().ln_1p()
    } else {
        0.0
    };
    let (hi, lo) = if ln_cross > ln_cosh { (ln_cross, ln_cosh) } else { (ln_cosh, ln_cross) };
    let ln_a = hi + (lo - hi).exp().ln_1p();
    (ln_a + (1.0 + (1.0 - (-2.0 * ln_a).exp()).sqrt()).ln()) / a
}

/// Geodesic distance on a warped surface via the Clairaut integrals.
///
/// A geodesic with Clairaut constant `c = f(r)^2 theta'` advances the angle by
/// `int c / (f sqrt(f^2 - c^2)) dr` over a length `int f / sqrt(f^2 - c^2) dr`.
/// Geodesics joining the two points form a one-parameter family: monotone in
/// `r` for `c <= f(r_in)`, otherwise turning at `r*` with `f(r*) = c`. The
/// family is parametrized by `s` in `[0, 2]` and the angle advance, which
/// increases from 0 to pi, is inverted by bisection.
pub fn rotsym_distance(m: &ModelSpec, p: &PolarPoint, q: &PolarPoint) -> Result<f64> {
    let w = match m {
        ModelSpec::RotSym(w) => w,
        ModelSpec::ConstantCurvature(_) => {
            return Err(Error::Unsupported("rotsym_distance needs a warped surface".into()))
        }
    };
    w.check(p.r)?;
    w.check(q.r)?;
    if p.dir.len() != 2 || q.dir.len() != 2 {
        return Err(Error::param("warped surfaces are two-dimensional"));
    }
    let dtheta = p.angle_to(q);
    let (r_in, r_out) = if p.r <= q.r { (p.r, q.r) } else { (q.r, p.r) };
    if dtheta < 1e-14 || r_in == 0.0 {
        return Ok(if dtheta < 1e-14 { r_out - r_in } else { r_out });
    }
    let through_pole = r_in + r_out;
    if std::f64::consts::PI - dtheta < 1e-12 {
        return Ok(through_pole);
    }
    let grid = &w.grid;

    // Integral over [lo, hi] after r = lo + u^2, which absorbs the inverse
    // square-root singularity at a turning point.
    let piece = |lo: f64, hi: f64, c: f64, angle: bool| -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let fc = c;
        let g = |u: f64| {
            let r = lo + u * u;
            let f = grid.value(r);
            let disc = ((f - fc) * (f + fc)).max(0.0);
            if disc == 0.0 {
                return 0.0;
            }
            let root = disc.sqrt();
            let val = if angle { fc / (f * root) } else { f / root };
            2.0 * u * val
        };
        let u_max = (hi - lo).sqrt();
        let u_b = (10.0 * lo).max(1e-8).min(hi - lo).sqrt();
        let breaks = if u_b < u_max { vec![0.0, u_b, u_max] } else { vec![0.0, u_max] };
        Ok(quad::integrate_with_breaks(g, &breaks, 1e-10, 1e-8)?.value)
    };
    let family = |s: f64, angle: bool| -> Result<f64> {
        if s <= 1.0 {
            let c = s * grid.value(r_in);
            piece(r_in, r_out, c, angle)
        } else {
            let r_star = r_in * (2.0 - s);
            let c = grid.value(r_star);
            Ok(piece(r_star, r_in, c, angle)? + piece(r_star, r_out, c, angle)?)
        }
    };

    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    for _ in 0..200 {
        if hi - lo < 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if family(mid, true)? < dtheta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo >= 1e-14 {
        return Err(Error::numeric(format!(
            "Clairaut parameter search did not converge: bracket [{lo}, {hi}], r = ({}, {}), dtheta = {dtheta}",
            p.r, q.r
        )));
    }
    let s = 0.5 * (lo + hi);
    if s >= 2.0 - 1e-13 {
        return Ok(through_pole);
    }
    let len = family(s, false)?;
    Ok(len.min(through_pole))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinh_surface() -> ModelSpec {
        let grid = WarpGrid::from_fn(f64::sinh, 30.0, 3000).unwrap();
        ModelSpec::rotsym(WarpSurface::new(grid, 0.99, 1.01).unwrap())
    }

    #[test]
    fn volume_density_values() {
        let h3 = ModelSpec::constant(3, 1.0).unwrap();
        assert!((h3.volume_density(1.0).unwrap() - 1f64.sinh().powi(2)).abs() < 1e-15);
        assert!((h3.volume_density(1.0).unwrap() - 1.381_097_845_541_8).abs() < 1e-12);
        assert_eq!(h3.volume_density(0.0).unwrap(), 0.0);
        let slope = h3.log_volume_density(50.0).unwrap() / 50.0;
        assert!((slope - 2.0).abs() < 0.02 * 2.0, "{slope}");
        assert!((h3.log_volume_density(3.0).unwrap() - h3.volume_density(3.0).unwrap().ln()).abs() < 1e-12);
    }

    #[test]
    fn drift_and_angular_rate_values() {
        let h3 = ModelSpec::constant(3, 1.0).unwrap();
        assert!((h3.radial_drift(20.0).unwrap() - 2.0).abs() < 1e-8);
        let h2 = ModelSpec::constant(2, 1.0).unwrap();
        assert!((h2.radial_drift(1.0).unwrap() - 1.313_035_285_499_331).abs() < 1e-12);
        assert!((h2.angular_rate(1.0).unwrap() - 0.724_061_661_103_9).abs() < 1e-9);
        assert!(h2.angular_rate(40.0).unwrap() < 1e-30);
        assert!(matches!(h2.radial_drift(0.0), Err(Error::Singularity(_))));
        assert!(matches!(h2.angular_rate(0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn drift_remainder_is_continuous_at_threshold() {
        let h3 = ModelSpec::constant(3, 1.3).unwrap();
        let x = 1e-3 / 1.3;
        let a = h3.drift_remainder(x * (1.0 - 1e-9)).unwrap();
        let b = h3.drift_remainder(x * (1.0 + 1e-9)).unwrap();
        assert!((a - b).abs() < 1e-9);
        let r = 2.0;
        let direct = h3.radial_drift(r).unwrap() - 2.0 / r;
        assert!((h3.drift_remainder(r).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn sinh_grid_matches_closed_form() {
        let rs = sinh_surface();
        let cc = ModelSpec::constant(2, 1.0).unwrap();
        for i in 1..=100 {
            let r = 0.29 * i as f64;
            let d1 = rs.radial_drift(r).unwrap();
            let d2 = cc.radial_drift(r).unwrap();
            assert!((d1 - d2).abs() < 1e-6 * d2, "drift at {r}: {d1} vs {d2}");
            let a1 = rs.angular_rate(r).unwrap();
            let a2 = cc.angular_rate(r).unwrap();
            assert!((a1 - a2).abs() < 1e-6 * a2, "rate at {r}");
        }
        assert!(matches!(rs.volume_density(31.0), Err(Error::Range { .. })));
    }

    #[test]
    fn pinching_validator_and_sandwich() {
        let grid = WarpGrid::from_curvature(oscillating_profile(1.0, 1.2), 40.0, 8000).unwrap();
        let surf = WarpSurface::new(grid.clone(), 1.0, 1.2).unwrap();
        let rep = surf.report();
        assert!(rep.min_curvature >= 1.0 - PINCH_EPS && rep.max_curvature <= 1.44 + PINCH_EPS);
        assert_eq!(rep.sandwich_violations, 0, "{rep:?}");
        assert!(rep.curvature_gradient_bound > 0.0);
        // Declared bounds that exclude the profile are rejected.
        assert!(matches!(WarpSurface::new(grid, 1.0, 1.1), Err(Error::Config(_))));
    }

    #[test]
    fn grid_validation_errors() {
        assert!(WarpGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).is_err());
        assert!(WarpGrid::new(vec![0.1, 1.0, 2.0, 3.0], vec![0.0, 1.0, 2.0, 3.0]).is_err());
        assert!(WarpGrid::new(vec![0.0, 0.1, 0.1, 0.3], vec![0.0, 0.1, 0.2, 0.3]).is_err());
        assert!(WarpGrid::new(vec![0.0, 0.1, 0.2, 0.3], vec![0.0, 0.2, 0.4, 0.6]).is_err());
        assert!(WarpGrid::new(vec![0.0, 0.1, 0.2, 0.3], vec![0.0, 0.1, -0.2, 0.3]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let grid = WarpGrid::from_fn(f64::sinh, 5.0, 50).unwrap();
        let back = WarpGrid::parse(&grid.to_text()).unwrap();
        assert_eq!(grid, back);
        assert!(WarpGrid::parse("0 0\n1 x\n").is_err());
    }

    #[test]
    fn rotsym_distance_trivial_cases() {
        let m = sinh_surface();
        let p = PolarPoint::planar(2.0, 0.7);
        assert_eq!(rotsym_distance(&m, &p, &p).unwrap(), 0.0);
        let q = PolarPoint::planar(5.5, 0.7);
        assert!((rotsym_distance(&m, &p, &q).unwrap() - 3.5).abs() < 1e-12);
        let cc = ModelSpec::constant(2, 1.0).unwrap();
        assert!(matches!(rotsym_distance(&cc, &p, &q), Err(Error::Unsupported(_))));
        assert!(matches!(
            rotsym_distance(&m, &p, &PolarPoint::planar(40.0, 0.0)),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn rotsym_distance_matches_law_of_cosines() {
        let m = sinh_surface();
        let cc = ModelSpec::constant(2, 1.0).unwrap();
        let cases = [
            (1.0, 0.0, 1.0, 1.0),
            (0.3, 0.2, 4.0, 2.9),
            (2.5, -1.0, 6.0, 1.5),
            (5.0, 0.0, 5.0, 3.1),
            (0.05, 0.0, 0.2, 3.0),
            (8.0, 0.0, 3.0, 0.01),
        ];
        for (r1, t1, r2, t2) in cases {
            let (p, q) = (PolarPoint::planar(r1, t1), PolarPoint::planar(r2, t2));
            let got = rotsym_distance(&m, &p, &q).unwrap();
            let expected = cc.polar_distance(&p, &q).unwrap();
            let dth = (t2 - t1).abs();
            let lc = (r1.cosh() * r2.cosh() - r1.sinh() * r2.sinh() * dth.cos()).acosh();
            assert!((expected - lc).abs() < 1e-9 * lc.max(1.0));
            assert!((got - expected).abs() < 1e-5 * expected.max(1.0), "{r1} {t1} {r2} {t2}: {got} vs {expected}");
        }
    }

    #[test]
    fn space_form_polar_distance_large_radii() {
        let h3 = SpaceForm::new(3, 1.0).unwrap();
        let p = PolarPoint::new(400.0, vec![1.0, 0.0, 0.0]).unwrap();
        let q = PolarPoint::new(401.0, vec![0.0, 1.0, 0.0]).unwrap();
        // Far apart in angle: d ~ r1 + r2 + 2 ln sin(theta/2) = 801 + ln(1/2).
        let d = space_form_polar_distance(h3, &p, &q);
        assert!((d - (801.0 + 0.5f64.ln())).abs() < 1e-9, "{d}");
        let q0 = PolarPoint::new(0.1, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((space_form_polar_distance(h3, &p, &q0) - 399.9).abs() < 1e-9);
    }
}
