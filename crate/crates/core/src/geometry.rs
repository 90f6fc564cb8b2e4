//! Exact geometry of the hyperbolic space H^d(-a^2).
//!
//! Points live on the upper sheet `<x, x>_M = -1/a^2` of Minkowski space
//! R^{1,d} with `<u, v>_M = -u0 v0 + sum_i ui vi`. Boundary points are
//! future-null directions normalized so that the time coordinate is 1.
//! For d = 2, a = 1 the [`halfplane`] submodule supplies the upper half-plane
//! chart used by the exact sampler and the modular-surface code.
//!
//! Gromov products carry the factor 1/2, so that
//! `(xi|eta)_x - (xi|eta)_y = b(x,y,xi)/2 + b(x,y,eta)/2`.

use crate::error::{Error, Result};

/// Tolerance for the sheet, null and tangency invariants.
pub const INVARIANT_TOL: f64 = 1e-10;

/// Minkowski bilinear form `-u0 v0 + sum_i ui vi`.
#[inline]
pub fn minkowski(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut s = -u[0] * v[0];
    for i in 1..u.len() {
        s += u[i] * v[i];
    }
    s
}

fn euclid_sq(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum()
}

/// `acosh(1 + u)` for `u >= 0`, accurate for small and large `u`.
#[inline]
pub fn acosh1p(u: f64) -> f64 {
    let u = u.max(0.0);
    if u > 1e8 {
        (2.0 * (1.0 + u)).ln()
    } else {
        (u + (u * (u + 2.0)).sqrt()).ln_1p()
    }
}

/// Point of H^d(-a^2) on the upper sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: Vec<f64>,
    a: f64,
}

/// Tangent vector at an [`HPoint`], in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HTangent {
    base: HPoint,
    vec: Vec<f64>,
}

/// Point of the visual boundary as a future-null vector with `xi0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    direction: Vec<f64>,
}

fn check_curvature(a: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param(format!("curvature parameter a must be positive, got {a}")));
    }
    Ok(())
}

fn same_curvature(x: &HPoint, y: &HPoint) -> Result<()> {
    if x.a != y.a {
        return Err(Error::param(format!(
            "curvature mismatch: a = {} vs a = {}",
            x.a, y.a
        )));
    }
    if x.coords.len() != y.coords.len() {
        return Err(Error::param(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(())
}

impl HPoint {
    /// Base point `o = (1/a, 0, ..., 0)`.
    pub fn origin(dim: usize, a: f64) -> Result<Self> {
        check_curvature(a)?;
        if dim < 1 {
            return Err(Error::param("dimension must be at least 1"));
        }
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0 / a;
        Ok(HPoint { coords, a })
    }

    /// Lift spatial coordinates to the sheet by solving for the time coordinate.
    pub fn from_spatial(spatial: &[f64], a: f64) -> Result<Self> {
        check_curvature(a)?;
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push((1.0 / (a * a) + euclid_sq(spatial)).sqrt());
        coords.extend_from_slice(spatial);
        Ok(HPoint { coords, a })
    }

    /// Validate ambient coordinates against the sheet invariants.
    pub fn from_coords(coords: Vec<f64>, a: f64) -> Result<Self> {
        check_curvature(a)?;
        if coords.len() < 2 {
            return Err(Error::param("need at least 2 ambient coordinates"));
        }
        if !(coords[0] > 0.0) {
            return Err(Error::domain("point is not on the upper sheet (x0 <= 0)"));
        }
        let q = minkowski(&coords, &coords);
        let scale = coords[0] * coords[0];
        if (q + 1.0 / (a * a)).abs() > INVARIANT_TOL * scale.max(1.0 / (a * a)) {
            return Err(Error::domain(format!(
                "sheet invariant violated: <x,x> = {q}, expected {}",
                -1.0 / (a * a)
            )));
        }
        Ok(HPoint { coords, a })
    }

    pub(crate) fn from_raw_unchecked(coords: Vec<f64>, a: f64) -> Self {
        HPoint { coords, a }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn curvature(&self) -> f64 {
        self.a
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Relative defect of the sheet equation; zero up to rounding for valid points.
    pub fn sheet_defect(&self) -> f64 {
        let q = minkowski(&self.coords, &self.coords);
        let inv = 1.0 / (self.a * self.a);
        (q + inv).abs() / (self.coords[0] * self.coords[0]).max(inv)
    }

    /// Orthonormal frame of the tangent space: the Lorentz boost taking `o`
    /// to `self`, applied to the coordinate axes.
    pub fn tangent_frame(&self) -> Vec<HTangent> {
        let d = self.dim();
        (0..d)
            .map(|i| {
                let mut g = vec![0.0; d];
                g[i] = 1.0;
                HTangent {
                    base: self.clone(),
                    vec: boost_tangent(&self.coords, self.a, &g),
                }
            })
            .collect()
    }
}

/// Push a vector `g` of the tangent space at `o` (coordinates along the
/// spatial axes) to the tangent space at `x` by the boost taking `o` to `x`.
pub(crate) fn boost_tangent(x: &[f64], a: f64, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    boost_tangent_into(x, a, g, &mut out);
    out
}

#[inline]
pub(crate) fn boost_tangent_into(x: &[f64], a: f64, g: &[f64], out: &mut [f64]) {
    let y0 = a * x[0];
    let mut dot = 0.0;
    for i in 0..g.len() {
        dot += a * x[i + 1] * g[i];
    }
    out[0] = dot;
    let k = dot / (1.0 + y0);
    for i in 0..g.len() {
        out[i + 1] = g[i] + k * a * x[i + 1];
    }
}

impl HTangent {
    /// Tangent vector, validated for tangency (not for unit length).
    pub fn new(base: HPoint, vec: Vec<f64>) -> Result<Self> {
        if vec.len() != base.coords.len() {
            return Err(Error::param("tangent vector has the wrong number of coordinates"));
        }
        let t = minkowski(&base.coords, &vec);
        let scale = base.coords[0] * euclid_sq(&vec).sqrt();
        if t.abs() > INVARIANT_TOL * scale.max(1.0) {
            return Err(Error::domain(format!("vector is not tangent: <x,v> = {t:e}")));
        }
        Ok(HTangent { base, vec })
    }

    /// Project an arbitrary ambient vector onto the tangent space and scale
    /// it to unit length.
    pub fn unit_from_ambient(base: &HPoint, raw: &[f64]) -> Result<Self> {
        if raw.len() != base.coords.len() {
            return Err(Error::param("vector has the wrong number of coordinates"));
        }
        let a2 = base.a * base.a;
        let c = a2 * minkowski(&base.coords, raw);
        let mut v: Vec<f64> = raw.iter().zip(&base.coords).map(|(r, x)| r + c * x).collect();
        let n = minkowski(&v, &v);
        if !(n > 0.0) {
            return Err(Error::Normalization("projected vector vanishes".into()));
        }
        let n = n.sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        Ok(HTangent { base: base.clone(), vec: v })
    }

    /// Unit tangent whose coordinates in the boosted frame at `base` are `dir`.
    pub fn from_frame(base: &HPoint, dir: &[f64]) -> Result<Self> {
        if dir.len() != base.dim() {
            return Err(Error::param("frame direction has the wrong dimension"));
        }
        let n = euclid_sq(dir).sqrt();
        if !(n > 0.0) {
            return Err(Error::Normalization("zero direction".into()));
        }
        let g: Vec<f64> = dir.iter().map(|x| x / n).collect();
        Ok(HTangent { base: base.clone(), vec: boost_tangent(&base.coords, base.a, &g) })
    }

    pub fn base(&self) -> &HPoint {
        &self.base
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn norm_sq(&self) -> f64 {
        minkowski(&self.vec, &self.vec)
    }

    fn check_unit(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > INVARIANT_TOL.max(1e-12 * self.base.coords[0].powi(2)) {
            return Err(Error::Normalization(format!("|v|^2 = {n}, expected 1")));
        }
        Ok(())
    }
}

/// Geodesic distance.
pub fn distance(x: &HPoint, y: &HPoint) -> Result<f64> {
    same_curvature(x, y)?;
    Ok(distance_unchecked(&x.coords, &y.coords, x.a))
}

#[inline]
pub(crate) fn distance_unchecked(x: &[f64], y: &[f64], a: f64) -> f64 {
    let ch = -a * a * minkowski(x, y);
    if ch > 2.0 {
        return acosh1p(ch - 1.0) / a;
    }
    // Near the diagonal use |x - y|_M^2 = (4/a^2) sinh^2(a d / 2).
    let mut q = -(x[0] - y[0]).powi(2);
    for i in 1..x.len() {
        q += (x[i] - y[i]).powi(2);
    }
    2.0 * (0.5 * a * q.max(0.0).sqrt()).asinh() / a
}

/// Point at arclength `t` along the geodesic from `x` with unit initial velocity `v`.
pub fn exp_map(x: &HPoint, v: &HTangent, t: f64) -> Result<HPoint> {
    same_curvature(x, &v.base)?;
    if x.coords != v.base.coords {
        return Err(Error::param("tangent vector is not based at the given point"));
    }
    v.check_unit()?;
    Ok(exp_unchecked(x, &v.vec, t))
}

fn exp_unchecked(x: &HPoint, v: &[f64], t: f64) -> HPoint {
    let a = x.a;
    let (s, c) = ((a * t).sinh() / a, (a * t).cosh());
    let spatial: Vec<f64> = (1..x.coords.len()).map(|i| c * x.coords[i] + s * v[i]).collect();
    HPoint::from_spatial(&spatial, a).expect("curvature already validated")
}

/// Velocity at time `t` of the geodesic `exp_map(x, v, .)`, a unit tangent at
/// `exp_map(x, v, t)`.
pub fn geodesic_velocity(x: &HPoint, v: &HTangent, t: f64) -> Result<HTangent> {
    let end = exp_map(x, v, t)?;
    let a = x.a;
    let raw: Vec<f64> = x
        .coords
        .iter()
        .zip(&v.vec)
        .map(|(xi, vi)| a * (a * t).sinh() * xi + (a * t).cosh() * vi)
        .collect();
    HTangent::unit_from_ambient(&end, &raw)
}

/// Inverse of [`exp_map`]: unit initial direction and distance from `x` to
/// `y`. Fails when the points coincide.
pub fn log_map(x: &HPoint, y: &HPoint) -> Result<(HTangent, f64)> {
    same_curvature(x, y)?;
    let dist = distance_unchecked(&x.coords, &y.coords, x.a);
    if dist == 0.0 {
        return Err(Error::domain("log map of coincident points"));
    }
    let c = (x.a * dist).cosh();
    let raw: Vec<f64> = y.coords.iter().zip(&x.coords).map(|(yi, xi)| yi - c * xi).collect();
    Ok((HTangent::unit_from_ambient(x, &raw)?, dist))
}

impl BoundaryPoint {
    /// Boundary point in the direction of the unit spatial vector `u` as seen from `o`.
    pub fn from_direction(u: &[f64]) -> Result<Self> {
        let n = euclid_sq(u).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Normalization("boundary direction must be nonzero".into()));
        }
        let mut direction = Vec::with_capacity(u.len() + 1);
        direction.push(1.0);
        direction.extend(u.iter().map(|x| x / n));
        Ok(BoundaryPoint { direction })
    }

    /// Validate a null vector and rescale it to `xi0 = 1`.
    pub fn from_null(raw: &[f64]) -> Result<Self> {
        if raw.len() < 2 || !(raw[0] > 0.0) {
            return Err(Error::domain("boundary vector must be future-pointing"));
        }
        let direction: Vec<f64> = raw.iter().map(|x| x / raw[0]).collect();
        let q = minkowski(&direction, &direction);
        if q.abs() > INVARIANT_TOL {
            return Err(Error::domain(format!("boundary vector is not null: <xi,xi> = {q:e}")));
        }
        Ok(BoundaryPoint { direction })
    }

    /// Endpoint of the geodesic ray from the base of `v` in direction `v`.
    pub fn from_ray(v: &HTangent) -> Result<Self> {
        v.check_unit()?;
        let a = v.base.a;
        let raw: Vec<f64> = v.base.coords.iter().zip(&v.vec).map(|(x, w)| a * x + w).collect();
        // Null up to rounding; renormalize the spatial part exactly.
        let spatial: Vec<f64> = raw[1..].to_vec();
        Self::from_direction(&spatial)
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn dim(&self) -> usize {
        self.direction.len() - 1
    }
}

/// Unit tangent at `x` pointing along the geodesic ray to `xi`.
pub fn direction_to(x: &HPoint, xi: &BoundaryPoint) -> Result<HTangent> {
    if xi.direction.len() != x.coords.len() {
        return Err(Error::param("boundary point has the wrong dimension"));
    }
    let a = x.a;
    let lam = -1.0 / (a * minkowski(&x.coords, &xi.direction));
    let raw: Vec<f64> =
        xi.direction.iter().zip(&x.coords).map(|(e, xc)| lam * e - a * xc).collect();
    HTangent::unit_from_ambient(x, &raw)
}

/// Busemann function `b(y, x, xi) = lim d(y, z) - d(x, z)` as `z -> xi`;
/// decreases with unit slope along the ray from `x` to `xi`.
pub fn busemann(y: &HPoint, x: &HPoint, xi: &BoundaryPoint) -> Result<f64> {
    same_curvature(x, y)?;
    if xi.direction.len() != x.coords.len() {
        return Err(Error::param("boundary point has the wrong dimension"));
    }
    let num = minkowski(&y.coords, &xi.direction);
    let den = minkowski(&x.coords, &xi.direction);
    Ok((num / den).ln() / x.a)
}

/// Gromov product `(xi|eta)_x`, with the factor 1/2.
pub fn gromov_product(xi: &BoundaryPoint, eta: &BoundaryPoint, x: &HPoint) -> Result<f64> {
    if xi.direction.len() != x.coords.len() || eta.direction.len() != x.coords.len() {
        return Err(Error::param("boundary point has the wrong dimension"));
    }
    let a = x.a;
    let cross = -minkowski(&xi.direction, &eta.direction);
    if cross <= 1e-300 || cross <= f64::EPSILON * 1e-2 {
        return Err(Error::InfiniteProduct);
    }
    let px = minkowski(&x.coords, &xi.direction);
    let py = minkowski(&x.coords, &eta.direction);
    let q = cross / (2.0 * a * a * px * py);
    Ok((-q.ln() / (2.0 * a)).max(0.0))
}

/// Visual distance `exp(-tau (xi|eta)_x)`; `coincident` flags the `xi = eta`
/// convention value 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisualDistance {
    pub value: f64,
    pub coincident: bool,
}

pub fn visual_distance(
    xi: &BoundaryPoint,
    eta: &BoundaryPoint,
    x: &HPoint,
    tau: f64,
) -> Result<VisualDistance> {
    if !(tau > 0.0) {
        return Err(Error::param("visual parameter tau must be positive"));
    }
    match gromov_product(xi, eta, x) {
        Ok(g) => Ok(VisualDistance { value: (-tau * g).exp(), coincident: false }),
        Err(Error::InfiniteProduct) => Ok(VisualDistance { value: 0.0, coincident: true }),
        Err(e) => Err(e),
    }
}

/// Default visual parameter `tau = a / 2`.
pub fn default_tau(a: f64) -> f64 {
    0.5 * a
}

/// Quasi-ultrametric constant `delta` for boundary Gromov products:
/// `(xi|zeta)_x >= min((xi|eta)_x, (eta|zeta)_x) - delta` with `delta = ln 2 / a`.
pub fn boundary_delta(a: f64) -> f64 {
    std::f64::consts::LN_2 / a
}

/// Upper half-plane chart of H^2(-1).
pub mod halfplane {
    use super::*;
    use num_complex::Complex64;

    /// Boundary point of the half-plane: a real number or infinity.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub enum HalfPlaneBoundary {
        Real(f64),
        Infinity,
    }

    fn check(z: Complex64) -> Result<()> {
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(Error::domain(format!("half-plane point needs Im z > 0, got {z}")));
        }
        Ok(())
    }

    /// Chart map to the hyperboloid; `i` goes to the origin.
    pub fn to_hyperboloid(z: Complex64) -> Result<HPoint> {
        check(z)?;
        let s = z.norm_sqr();
        let y = z.im;
        Ok(HPoint::from_raw_unchecked(
            vec![(1.0 + s) / (2.0 * y), (s - 1.0) / (2.0 * y), z.re / y],
            1.0,
        ))
    }

    pub fn from_hyperboloid(p: &HPoint) -> Result<Complex64> {
        if p.dim() != 2 || p.curvature() != 1.0 {
            return Err(Error::param("half-plane chart needs d = 2, a = 1"));
        }
        let c = p.coords();
        let y = 1.0 / (c[0] - c[1]);
        Ok(Complex64::new(c[2] * y, y))
    }

    /// Distance `acosh(1 + |z-w|^2 / (2 Im z Im w))`.
    pub fn distance(z: Complex64, w: Complex64) -> Result<f64> {
        check(z)?;
        check(w)?;
        Ok(2.0 * ((z - w).norm() / (2.0 * (z.im * w.im).sqrt())).asinh())
    }

    /// Distance between points given as `(x, ln y)`; robust for very small `y`.
    pub fn distance_log(x1: f64, log_y1: f64, x2: f64, log_y2: f64) -> f64 {
        let dy = log_y1.exp() - log_y2.exp();
        let chord = ((x1 - x2).powi(2) + dy * dy).sqrt();
        if chord == 0.0 {
            return 0.0;
        }
        let log_l = chord.ln() - std::f64::consts::LN_2 - 0.5 * (log_y1 + log_y2);
        if log_l > 20.0 {
            2.0 * (log_l + std::f64::consts::LN_2)
        } else {
            2.0 * log_l.exp().asinh()
        }
    }

    pub fn boundary_to_null(b: HalfPlaneBoundary) -> BoundaryPoint {
        match b {
            HalfPlaneBoundary::Infinity => BoundaryPoint { direction: vec![1.0, 1.0, 0.0] },
            HalfPlaneBoundary::Real(t) => {
                let n = 1.0 + t * t;
                BoundaryPoint { direction: vec![1.0, (t * t - 1.0) / n, 2.0 * t / n] }
            }
        }
    }

    pub fn boundary_from_null(xi: &BoundaryPoint) -> Result<HalfPlaneBoundary> {
        if xi.dim() != 2 {
            return Err(Error::param("half-plane boundary needs d = 2"));
        }
        let (c, s) = (xi.direction[1], xi.direction[2]);
        if 1.0 - c <= 1e-15 {
            Ok(HalfPlaneBoundary::Infinity)
        } else {
            // t = s / (1 - c) = (1 + c) / s; pick the well-conditioned form.
            if c < 0.0 {
                Ok(HalfPlaneBoundary::Real(s / (1.0 - c)))
            } else {
                Ok(HalfPlaneBoundary::Real((1.0 + c) / s))
            }
        }
    }

    /// `ln` of the Poisson-type weight `Im z / |z - t|^2` (or `Im z` at infinity).
    fn log_weight(x: f64, log_y: f64, b: HalfPlaneBoundary) -> f64 {
        match b {
            HalfPlaneBoundary::Infinity => log_y,
            HalfPlaneBoundary::Real(t) => {
                let y = log_y.exp();
                log_y - ((x - t).powi(2) + y * y).ln()
            }
        }
    }

    /// Busemann function `b(z, w, xi)` in half-plane coordinates `(x, ln y)`.
    pub fn busemann_log(
        z: (f64, f64),
        w: (f64, f64),
        xi: HalfPlaneBoundary,
    ) -> f64 {
        log_weight(w.0, w.1, xi) - log_weight(z.0, z.1, xi)
    }

    /// Gromov product `(xi|eta)_z` in half-plane coordinates.
    pub fn gromov_log(
        xi: HalfPlaneBoundary,
        eta: HalfPlaneBoundary,
        z: (f64, f64),
    ) -> Result<f64> {
        use HalfPlaneBoundary::*;
        // exp(-2 (xi|eta)_z) = |xi - eta|^2 * w_xi(z) * w_eta(z), with the
        // point at infinity contributing weight Im z and no distance factor.
        let log_sep = match (xi, eta) {
            (Infinity, Infinity) => return Err(Error::InfiniteProduct),
            (Real(s), Real(t)) => {
                if s == t {
                    return Err(Error::InfiniteProduct);
                }
                2.0 * (s - t).abs().ln()
            }
            _ => 0.0,
        };
        let q = log_sep + log_weight(z.0, z.1, xi) + log_weight(z.0, z.1, eta);
        Ok((-0.5 * q).max(0.0))
    }
}
