//! Brownian paths under the generator `Delta`.
//!
//! Three schemes:
//! - [`Scheme::HalfPlaneExact`] (H^2, a = 1): `ln y` is advanced exactly in
//!   law and `x` with the geometric-midpoint rule;
//! - [`Scheme::PolarEm`] (any model): geodesic polar coordinates about a
//!   pole, split into the exactly solvable flat Bessel part and a smooth
//!   curvature remainder of the drift;
//! - [`Scheme::HyperboloidEm`] (constant curvature): ambient Euler step with
//!   reprojection to the sheet. The reprojection adds an O(dt) weak error.
//!
//! Distances reported for a path are measured from its own starting point,
//! so the closed-form laws apply whatever the start.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, halfplane, BoundaryPoint, HPoint};
use crate::models::{ModelSpec, PolarPoint, SpaceForm};
use crate::rng::path_rng;

/// Below this radius the polar scheme takes a flat Gaussian step in normal
/// coordinates instead of the polar split step.
pub const R_FLOOR: f64 = 1e-3;

/// Largest step for the half-plane and polar schemes.
pub const MAX_DT: f64 = 0.01;
/// Largest step for the hyperboloid scheme.
pub const MAX_DT_HYPERBOLOID: f64 = 0.005;

/// Default decimation of recorded states.
pub const DEFAULT_RECORD_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    HalfPlaneExact,
    PolarEm,
    HyperboloidEm,
}

impl Scheme {
    pub fn code(self) -> u32 {
        match self {
            Scheme::HalfPlaneExact => 1,
            Scheme::PolarEm => 2,
            Scheme::HyperboloidEm => 3,
        }
    }

    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            1 => Ok(Scheme::HalfPlaneExact),
            2 => Ok(Scheme::PolarEm),
            3 => Ok(Scheme::HyperboloidEm),
            _ => Err(Error::config(format!("unknown scheme code {code}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::HalfPlaneExact => "half-plane-exact",
            Scheme::PolarEm => "polar-em",
            Scheme::HyperboloidEm => "hyperboloid-em",
        }
    }
}

/// Everything that determines a path set.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub model: ModelSpec,
    pub scheme: Scheme,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Record every k-th step; 0 records only the start, checkpoints and the end.
    pub record_every: usize,
    /// Extra times at which the state is always recorded (snapped to the step grid).
    pub checkpoints: Vec<f64>,
    /// Scheme-specific start: half-plane `[x, y]`; polar `[r, dir...]`;
    /// hyperboloid spatial coordinates. `None` uses the scheme default
    /// (`i`, `r = 0.1` along the first axis, the origin).
    pub start: Option<Vec<f64>>,
    /// Stamped into dumps; computed by the caller from its configuration.
    pub config_hash: u64,
}

impl SimSpec {
    pub fn new(model: ModelSpec, scheme: Scheme, t_end: f64, dt: f64, n_paths: usize, master_seed: u64) -> Self {
        SimSpec {
            model,
            scheme,
            t_end,
            dt,
            n_paths,
            master_seed,
            record_every: DEFAULT_RECORD_EVERY,
            checkpoints: Vec::new(),
            start: None,
            config_hash: 0,
        }
    }

    pub fn endpoints_only(mut self) -> Self {
        self.record_every = 0;
        self
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<f64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Width of one recorded state.
    pub fn state_width(&self) -> usize {
        match self.scheme {
            Scheme::HalfPlaneExact => 2,
            Scheme::PolarEm => 1 + self.model.dim(),
            Scheme::HyperboloidEm => 1 + self.model.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!("T must be finite and >= 0, got {}", self.t_end)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        let cap = match self.scheme {
            Scheme::HyperboloidEm => MAX_DT_HYPERBOLOID,
            _ => MAX_DT,
        };
        if self.dt > cap * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "dt = {} exceeds the limit {cap} of the {} scheme",
                self.dt,
                self.scheme.name()
            )));
        }
        let n = self.n_steps();
        if ((n as f64) * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::config(format!("T = {} is not a multiple of dt = {}", self.t_end, self.dt)));
        }
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be positive"));
        }
        for &c in &self.checkpoints {
            if !(c >= 0.0 && c <= self.t_end) {
                return Err(Error::config(format!("checkpoint {c} outside [0, T]")));
            }
        }
        match self.scheme {
            Scheme::HalfPlaneExact => match self.model.space_form() {
                Some(SpaceForm { dim: 2, a }) if a == 1.0 => {}
                _ => return Err(Error::config("the half-plane scheme needs H^2 with a = 1")),
            },
            Scheme::HyperboloidEm => {
                if self.model.space_form().is_none() {
                    return Err(Error::config("the hyperboloid scheme needs a constant-curvature model"));
                }
            }
            Scheme::PolarEm => {}
        }
        if let Some(s) = &self.start {
            let ok = match self.scheme {
                Scheme::HalfPlaneExact => s.len() == 2 && s[1] > 0.0 && s[0].is_finite(),
                Scheme::PolarEm => {
                    s.len() == 1 + self.model.dim()
                        && s[0] >= 0.0
                        && s[0] < self.model.r_max()
                        && s[1..].iter().any(|&v| v != 0.0)
                }
                Scheme::HyperboloidEm => s.len() == self.model.dim() && s.iter().all(|v| v.is_finite()),
            };
            if !ok {
                return Err(Error::config(format!("invalid start {s:?} for the {} scheme", self.scheme.name())));
            }
        }
        Ok(())
    }

    fn start_state(&self) -> Vec<f64> {
        let d = self.model.dim();
        match self.scheme {
            Scheme::HalfPlaneExact => {
                let s = self.start.clone().unwrap_or_else(|| vec![0.0, 1.0]);
                vec![s[0], s[1].ln()]
            }
            Scheme::PolarEm => {
                let mut s = self.start.clone().unwrap_or_else(|| {
                    let mut v = vec![0.0; d + 1];
                    v[0] = 0.1;
                    v[1] = 1.0;
                    v
                });
                let n: f64 = s[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                s[1..].iter_mut().for_each(|x| *x /= n);
                s
            }
            Scheme::HyperboloidEm => {
                let a = self.model.space_form().expect("validated").a;
                let spatial = self.start.clone().unwrap_or_else(|| vec![0.0; d]);
                let p = HPoint::from_spatial(&spatial, a).expect("validated");
                p.coords().to_vec()
            }
        }
    }

    /// Step indices at which states are recorded.
    fn record_mask(&self) -> Vec<usize> {
        let n = self.n_steps();
        let mut steps: Vec<usize> = vec![0, n];
        if self.record_every > 0 {
            steps.extend((0..=n).step_by(self.record_every));
        }
        for &c in &self.checkpoints {
            steps.push(((c / self.dt).round() as usize).min(n));
        }
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathStatus {
    Complete,
    /// The radius left the model's domain at time `t`; recording stopped.
    ExitedRmax { t: f64 },
}

/// One sampled trajectory. States are stored flat, `width` numbers each:
/// half-plane `(x, ln y)`; polar `(r, dir...)`; hyperboloid ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub path_id: u64,
    pub seed: u64,
    pub scheme: Scheme,
    pub width: usize,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub status: PathStatus,
}

impl Path {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.width..(i + 1) * self.width]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn is_complete(&self) -> bool {
        self.status == PathStatus::Complete
    }

    /// Index of the record at time `t` (nearest), if recorded.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - 1e-9);
        (i < self.len() && (self.times[i] - t).abs() <= 1e-9 * t.max(1.0)).then_some(i)
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct PathSet {
    pub spec: SimSpec,
    pub paths: Vec<Path>,
}

impl PathSet {
    /// Paths that ran to the end.
    pub fn complete(&self) -> impl Iterator<Item = &Path> {
        self.paths.iter().filter(|p| p.is_complete())
    }

    pub fn n_excluded(&self) -> usize {
        self.paths.iter().filter(|p| !p.is_complete()).count()
    }

    /// Distance from the start at record `i` of `path`.
    pub fn distance_from_start(&self, path: &Path, i: usize) -> Result<f64> {
        distance_between(&self.spec, path.state(0), path.state(i))
    }

    /// `(path_id, distance from start at time t)` over complete paths.
    pub fn distances_at(&self, t: f64) -> Result<Vec<(u64, f64)>> {
        self.complete()
            .map(|p| {
                let i = p.index_at(t).ok_or_else(|| Error::config(format!("time {t} was not recorded")))?;
                Ok((p.path_id, self.distance_from_start(p, i)?))
            })
            .collect()
    }

    pub fn final_distances(&self) -> Result<Vec<(u64, f64)>> {
        self.distances_at(self.spec.t_end)
    }

    /// Hyperboloid point for record `i` (constant-curvature models).
    pub fn point(&self, path: &Path, i: usize) -> Result<HPoint> {
        state_to_hpoint(&self.spec, path.state(i))
    }
}

fn distance_between(spec: &SimSpec, s0: &[f64], s1: &[f64]) -> Result<f64> {
    match spec.scheme {
        Scheme::HalfPlaneExact => Ok(halfplane::distance_log(s0[0], s0[1], s1[0], s1[1])),
        Scheme::PolarEm => {
            let p = PolarPoint { r: s0[0], dir: s0[1..].to_vec() };
            let q = PolarPoint { r: s1[0], dir: s1[1..].to_vec() };
            spec.model.polar_distance(&p, &q)
        }
        Scheme::HyperboloidEm => {
            let a = spec.model.space_form().expect("validated").a;
            Ok(geometry::distance_unchecked(s0, s1, a))
        }
    }
}

/// Hyperboloid point of a polar state about the origin.
pub fn polar_to_hpoint(sf: SpaceForm, r: f64, dir: &[f64]) -> Result<HPoint> {
    let a = sf.a;
    let sh = (a * r).sinh() / a;
    let spatial: Vec<f64> = dir.iter().map(|u| sh * u).collect();
    HPoint::from_spatial(&spatial, a)
}

fn state_to_hpoint(spec: &SimSpec, s: &[f64]) -> Result<HPoint> {
    let sf = spec
        .model
        .space_form()
        .ok_or_else(|| Error::Unsupported("hyperboloid points need a constant-curvature model".into()))?;
    match spec.scheme {
        Scheme::HalfPlaneExact => halfplane::to_hyperboloid(Complex64::new(s[0], s[1].exp())),
        Scheme::PolarEm => polar_to_hpoint(sf, s[0], &s[1..]),
        Scheme::HyperboloidEm => HPoint::from_coords(s.to_vec(), sf.a),
    }
}

/// Simulate the path set on the current rayon pool. Results are ordered by
/// path id and do not depend on the number of worker threads.
pub fn simulate(spec: &SimSpec) -> Result<PathSet> {
    spec.validate()?;
    let mask = spec.record_mask();
    let paths = (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|id| simulate_path(spec, &mask, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathSet { spec: spec.clone(), paths })
}

/// Simulate on a dedicated pool of `workers` threads (0: rayon default).
pub fn simulate_with_workers(spec: &SimSpec, workers: usize) -> Result<PathSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::numeric(format!("cannot build worker pool: {e}")))?;
    pool.install(|| simulate(spec))
}

/// Simulate a single path; `path_id` selects the random stream.
pub fn simulate_one(spec: &SimSpec, path_id: u64) -> Result<Path> {
    spec.validate()?;
    simulate_path(spec, &spec.record_mask(), path_id)
}

fn simulate_path(spec: &SimSpec, mask: &[usize], path_id: u64) -> Result<Path> {
    let mut rng = path_rng(spec.master_seed, path_id);
    let width = spec.state_width();
    let mut state = spec.start_state();
    let mut path = Path {
        path_id,
        seed: spec.master_seed,
        scheme: spec.scheme,
        width,
        times: Vec::with_capacity(mask.len()),
        states: Vec::with_capacity(mask.len() * width),
        status: PathStatus::Complete,
    };
    let n = spec.n_steps();
    let mut stepper = Stepper::new(spec)?;
    let mut next = 0usize;
    for step in 0..=n {
        if next < mask.len() && mask[next] == step {
            path.times.push(step as f64 * spec.dt);
            path.states.extend_from_slice(&state);
            next += 1;
        }
        if step == n {
            break;
        }
        if !stepper.step(&mut state, &mut rng)? {
            path.status = PathStatus::ExitedRmax { t: (step + 1) as f64 * spec.dt };
            break;
        }
    }
    Ok(path)
}

/// Single-step kernels shared with the quotient module.
pub(crate) struct Stepper<'a> {
    spec: &'a SimSpec,
    sigma: f64,
    g: Vec<f64>,
    tmp: Vec<f64>,
    // d = 2 polar paths keep their angle to avoid renormalization drift
    theta: Option<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(spec: &'a SimSpec) -> Result<Self> {
        let d = spec.model.dim();
        Ok(Stepper {
            spec,
            sigma: (2.0 * spec.dt).sqrt(),
            g: vec![0.0; d],
            tmp: vec![0.0; d + 1],
            theta: None,
        })
    }

    /// Advance `state` by one step; `false` when the path left `r_max`.
    pub(crate) fn step<R: Rng>(&mut self, state: &mut [f64], rng: &mut R) -> Result<bool> {
        match self.spec.scheme {
            Scheme::HalfPlaneExact => {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                halfplane_step(state, self.spec.dt, g1, g2);
                Ok(true)
            }
            Scheme::PolarEm => self.polar_step(state, rng),
            Scheme::HyperboloidEm => {
                self.hyperboloid_step(state, rng);
                Ok(true)
            }
        }
    }

    fn polar_step<R: Rng>(&mut self, state: &mut [f64], rng: &mut R) -> Result<bool> {
        let d = self.g.len();
        let dt = self.spec.dt;
        let sigma = self.sigma;
        for gi in self.g.iter_mut() {
            *gi = rng.sample(StandardNormal);
        }
        let r = state[0];
        if r < R_FLOOR {
            // flat step in normal coordinates about the pole
            let mut norm_sq = 0.0;
            for i in 0..d {
                let p = r * state[1 + i] + sigma * self.g[i];
                self.tmp[i] = p;
                norm_sq += p * p;
            }
            let rn = norm_sq.sqrt();
            state[0] = rn;
            if rn > 0.0 {
                for i in 0..d {
                    state[1 + i] = self.tmp[i] / rn;
                }
            }
            self.theta = None;
            return Ok(rn <= self.spec.model.r_max());
        }
        let u = &state[1..];
        let par: f64 = (0..d).map(|i| self.g[i] * u[i]).sum();
        let perp_sq: f64 = (0..d).map(|i| (self.g[i] - par * u[i]).powi(2)).sum();
        let remainder = self.spec.model.drift_remainder(r)?;
        let rate = self.spec.model.angular_rate(r)?;
        // flat Bessel part exactly, then the curvature part of the drift
        let rn = ((r + sigma * par).powi(2) + sigma * sigma * perp_sq).sqrt() + remainder * dt;
        let spread = sigma * rate.sqrt();
        if d == 2 {
            let theta = self.theta.unwrap_or_else(|| state[2].atan2(state[1]));
            // perpendicular component along (-sin, cos)
            let g_perp = -self.g[0] * u[1] + self.g[1] * u[0];
            let th = theta + spread * g_perp;
            self.theta = Some(th);
            state[1] = th.cos();
            state[2] = th.sin();
        } else {
            let mut norm_sq = 0.0;
            for i in 0..d {
                let v = u[i] + spread * (self.g[i] - par * u[i]);
                self.tmp[i] = v;
                norm_sq += v * v;
            }
            let n = norm_sq.sqrt();
            for i in 0..d {
                state[1 + i] = self.tmp[i] / n;
            }
        }
        state[0] = rn;
        Ok(rn <= self.spec.model.r_max())
    }

    fn hyperboloid_step<R: Rng>(&mut self, state: &mut [f64], rng: &mut R) {
        let d = self.g.len();
        let a = self.spec.model.space_form().expect("validated").a;
        let dt = self.spec.dt;
        for gi in self.g.iter_mut() {
            *gi = rng.sample(StandardNormal);
        }
        geometry::boost_tangent_into(state, a, &self.g, &mut self.tmp);
        let c = d as f64 * a * a * dt;
        let mut spatial_sq = 0.0;
        for i in 1..=d {
            let v = state[i] + self.sigma * self.tmp[i] + c * state[i];
            state[i] = v;
            spatial_sq += v * v;
        }
        state[0] = (1.0 / (a * a) + spatial_sq).sqrt();
    }
}

/// One half-plane step on `(x, ln y)` for H^2(-1):
/// `ln y += sqrt(2) dW2 - dt` exactly, `x += sqrt(2) y_mid dW1` with the
/// geometric midpoint `y_mid`.
#[inline]
pub(crate) fn halfplane_step(state: &mut [f64], dt: f64, g1: f64, g2: f64) {
    let s = (2.0 * dt).sqrt();
    let ly0 = state[1];
    let ly1 = ly0 + s * g2 - dt;
    let y_mid = (0.5 * (ly0 + ly1)).exp();
    state[0] += s * y_mid * g1;
    state[1] = ly1;
}

/// Boundary point read off a path, with the confidence flag of the
/// heuristic `r_T >= 0.8 ell T`.
#[derive(Debug, Clone)]
pub struct BoundaryEstimate {
    pub point: BoundaryPoint,
    /// Half-plane coordinate of the limit when the scheme is half-plane.
    pub halfplane: Option<halfplane::HalfPlaneBoundary>,
    pub t: f64,
    pub r_t: f64,
    pub confident: bool,
}

/// Boundary limit of a path from its last record: the final direction
/// (polar, hyperboloid) or `x_T` (half-plane).
pub fn boundary_limit(set: &PathSet, path: &Path) -> Result<BoundaryEstimate> {
    let spec = &set.spec;
    let last = path.last_state();
    let i = path.len() - 1;
    let t = path.times[i];
    let r_t = set.distance_from_start(path, i)?;
    // lower bound on the drift: (d-1) times the smallest curvature scale
    let ell = match &spec.model {
        ModelSpec::ConstantCurvature(sf) => sf.growth(),
        ModelSpec::RotSym(w) => w.bounds().0,
    };
    let confident = path.is_complete() && r_t >= 0.8 * ell * t;
    let (point, hp) = match spec.scheme {
        Scheme::HalfPlaneExact => {
            let b = halfplane::HalfPlaneBoundary::Real(last[0]);
            (halfplane::boundary_to_null(b), Some(b))
        }
        Scheme::PolarEm => (BoundaryPoint::from_direction(&last[1..])?, None),
        Scheme::HyperboloidEm => (BoundaryPoint::from_direction(&last[1..])?, None),
    };
    Ok(BoundaryEstimate { point, halfplane: hp, t, r_t, confident })
}

const DUMP_MAGIC: &[u8; 8] = b"HBMPATH1";

/// Write the binary path dump. Layout, all little endian:
/// magic `HBMPATH1`; u64 config hash; u32 scheme code; u32 state width;
/// u64 number of paths; then per path: u64 path id, u64 seed, u64 record
/// count, and `count` records of `1 + width` f64 values `(t, state...)`.
pub fn write_path_dump<W: Write>(set: &PathSet, mut w: W) -> Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&set.spec.config_hash.to_le_bytes())?;
    w.write_all(&set.spec.scheme.code().to_le_bytes())?;
    w.write_all(&(set.spec.state_width() as u32).to_le_bytes())?;
    w.write_all(&(set.paths.len() as u64).to_le_bytes())?;
    for p in &set.paths {
        w.write_all(&p.path_id.to_le_bytes())?;
        w.write_all(&p.seed.to_le_bytes())?;
        w.write_all(&(p.len() as u64).to_le_bytes())?;
        for i in 0..p.len() {
            w.write_all(&p.times[i].to_le_bytes())?;
            for v in p.state(i) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Contents of a path dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDump {
    pub config_hash: u64,
    pub scheme: Scheme,
    pub width: usize,
    /// `(path_id, seed, times, flat states)`
    pub paths: Vec<(u64, u64, Vec<f64>, Vec<f64>)>,
}

pub fn read_path_dump<R: Read>(mut r: R) -> Result<PathDump> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::config("not a path dump (bad magic)"));
    }
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    let mut u64_ = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let config_hash = u64_(&mut r)?;
    r.read_exact(&mut b4)?;
    let scheme = Scheme::from_code(u32::from_le_bytes(b4))?;
    r.read_exact(&mut b4)?;
    let width = u32::from_le_bytes(b4) as usize;
    let n = u64_(&mut r)?;
    let mut paths = Vec::new();
    for _ in 0..n {
        let id = u64_(&mut r)?;
        let seed = u64_(&mut r)?;
        let count = u64_(&mut r)? as usize;
        let mut times = Vec::with_capacity(count);
        let mut states = Vec::with_capacity(count * width);
        for _ in 0..count {
            times.push(f64::from_bits(u64_(&mut r)?));
            for _ in 0..width {
                states.push(f64::from_bits(u64_(&mut r)?));
            }
        }
        paths.push((id, seed, times, states));
    }
    Ok(PathDump { config_hash, scheme, width, paths })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h3() -> ModelSpec {
        ModelSpec::constant(3, 1.0).unwrap()
    }

    #[test]
    fn validation() {
        let ok = SimSpec::new(h3(), Scheme::PolarEm, 1.0, 0.01, 4, 1);
        assert!(ok.validate().is_ok());
        let big = SimSpec::new(h3(), Scheme::PolarEm, 1.0, 0.02, 4, 1);
        assert!(matches!(big.validate(), Err(Error::Config(_))));
        let hyp = SimSpec::new(h3(), Scheme::HyperboloidEm, 1.0, 0.01, 4, 1);
        assert!(hyp.validate().is_err());
        let hp = SimSpec::new(h3(), Scheme::HalfPlaneExact, 1.0, 0.01, 4, 1);
        assert!(hp.validate().is_err());
        let odd = SimSpec::new(h3(), Scheme::PolarEm, 1.005, 0.01, 4, 1);
        assert!(odd.validate().is_err());
    }

    #[test]
    fn recording_grid() {
        let spec = SimSpec::new(h3(), Scheme::PolarEm, 1.0, 0.01, 1, 1).with_checkpoints(vec![0.55]);
        let p = simulate_one(&spec, 0).unwrap();
        assert_eq!(p.times[0], 0.0);
        assert!((p.times.last().unwrap() - 1.0).abs() < 1e-12);
        assert!(p.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.len(), 12);
        let e = SimSpec::new(h3(), Scheme::PolarEm, 1.0, 0.01, 1, 1).endpoints_only();
        assert_eq!(simulate_one(&e, 0).unwrap().len(), 2);
    }

    #[test]
    fn hyperboloid_sheet_invariant() {
        let spec = SimSpec::new(h3(), Scheme::HyperboloidEm, 5.0, 0.005, 3, 2).with_start(vec![0.3, -0.2, 1.0]);
        let set = simulate(&spec).unwrap();
        for p in &set.paths {
            for i in 0..p.len() {
                let x = HPoint::from_coords(p.state(i).to_vec(), 1.0).unwrap();
                assert!(x.sheet_defect() < 1e-10);
            }
        }
    }

    #[test]
    fn same_stream_same_path() {
        let spec = SimSpec::new(h3(), Scheme::PolarEm, 2.0, 0.01, 5, 11);
        let set = simulate(&spec).unwrap();
        assert_eq!(simulate_one(&spec, 3).unwrap(), set.paths[3]);
        assert_ne!(set.paths[2].states, set.paths[3].states);
    }

    #[test]
    fn dump_round_trip() {
        let mut spec = SimSpec::new(ModelSpec::constant(2, 1.0).unwrap(), Scheme::HalfPlaneExact, 0.5, 0.01, 3, 5);
        spec.config_hash = 0xdead_beef;
        let set = simulate(&spec).unwrap();
        let mut buf = Vec::new();
        write_path_dump(&set, &mut buf).unwrap();
        let dump = read_path_dump(&buf[..]).unwrap();
        assert_eq!(dump.config_hash, 0xdead_beef);
        assert_eq!(dump.scheme, Scheme::HalfPlaneExact);
        assert_eq!(dump.paths.len(), 3);
        assert_eq!(dump.paths[1].2, set.paths[1].times);
        assert_eq!(dump.paths[1].3, set.paths[1].states);
        assert!(read_path_dump(&b"NOTADUMP"[..]).is_err());
    }
}
