//! The twelve acceptance criteria, each at its stated scale and tolerance.
//!
//! Path sets shared between criteria are simulated once per [`Acceptance`]
//! and cached. Every criterion returns its asserted checks together with
//! reported-only quantities (fitted rates, secondary estimators).

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, ModelKind, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{self, halfplane, BoundaryPoint, HPoint, HTangent};
use crate::heat::{self, log_green, model_constants, RadialLaw};
use crate::models::{ModelSpec, SpaceForm};
use crate::modular::{self, FdPoint, PartitionSpec};
use crate::rng::{derive_seed, path_rng};
use crate::sampler::{self, simulate, simulate_with_workers, PathSet, Scheme, SimSpec};
use crate::stats::{self, EstimateWithCI, Method};

/// One asserted comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo: None, hi: Some(hi), pass: value <= hi }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Check { name: name.into(), value, lo: Some(lo), hi: None, pass: value >= lo }
    }

    pub fn between(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo: Some(lo), hi: Some(hi), pass: value >= lo && value <= hi }
    }

    /// `target - tol <= value <= target + tol`.
    pub fn around(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check::between(name, value, target - tol, target + tol)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, lo: None, hi: None, pass: ok }
    }

    fn describe(&self) -> String {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => format!("{} = {:.5} in [{:.5}, {:.5}]", self.name, self.value, lo, hi),
            (None, Some(hi)) => format!("{} = {:.5e} <= {:.5e}", self.name, self.value, hi),
            (Some(lo), None) => format!("{} = {:.5} >= {:.5}", self.name, self.value, lo),
            (None, None) => format!("{} = {}", self.name, self.pass),
        }
    }
}

/// Quantity reported alongside a criterion but not asserted.
#[derive(Debug, Clone, Serialize)]
pub struct Note {
    pub name: String,
    pub value: f64,
}

fn note(name: &str, value: f64) -> Note {
    Note { name: name.into(), value }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub notes: Vec<Note>,
    /// Set when the criterion could not be evaluated.
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One line: status, id, title and every check.
    pub fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let body = match &self.error {
            Some(e) => format!("error: {e}"),
            None => self.checks.iter().map(Check::describe).collect::<Vec<_>>().join("; "),
        };
        format!("[{status}] {:>2} {}: {body}", self.id, self.title)
    }
}

pub const TITLES: [&str; 12] = [
    "drift",
    "entropy",
    "clt-distance",
    "clt-green",
    "busemann-drift",
    "gromov-contraction",
    "heat-kernel-library",
    "martin-kernel",
    "harmonic-measure",
    "doeblin-mixing",
    "equidistribution-and-identities",
    "engineering",
];

type Cached = OnceLock<std::result::Result<PathSet, String>>;

/// Shared state of one acceptance run.
pub struct Acceptance {
    seed: u64,
    h3_long: Cached,
    h2_long: Cached,
    h3_clt: Cached,
    h2_t5: Cached,
}

fn h2() -> ModelSpec {
    ModelSpec::constant(2, 1.0).expect("valid model")
}

fn h3() -> ModelSpec {
    ModelSpec::constant(3, 1.0).expect("valid model")
}

impl Acceptance {
    pub fn new(master_seed: u64) -> Self {
        Acceptance {
            seed: master_seed,
            h3_long: OnceLock::new(),
            h2_long: OnceLock::new(),
            h3_clt: OnceLock::new(),
            h2_t5: OnceLock::new(),
        }
    }

    fn seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    fn cached<'a>(&self, cell: &'a Cached, make: impl FnOnce() -> Result<PathSet>) -> Result<&'a PathSet> {
        cell.get_or_init(|| make().map_err(|e| e.to_string())).as_ref().map_err(|e| Error::numeric(e.clone()))
    }

    /// `H^3`, polar scheme, `T = 100`, `N = 1000`, checkpoint at `T/2`.
    pub fn h3_long(&self) -> Result<&PathSet> {
        self.cached(&self.h3_long, || {
            simulate(
                &SimSpec::new(h3(), Scheme::PolarEm, 100.0, 0.01, 1000, self.seed("h3-long"))
                    .endpoints_only()
                    .with_checkpoints(vec![50.0]),
            )
        })
    }

    /// `H^2`, half-plane scheme, `T = 100`, `N = 1000`, checkpoint at `T/2`.
    pub fn h2_long(&self) -> Result<&PathSet> {
        self.cached(&self.h2_long, || {
            simulate(
                &SimSpec::new(h2(), Scheme::HalfPlaneExact, 100.0, 0.01, 1000, self.seed("h2-long"))
                    .endpoints_only()
                    .with_checkpoints(vec![50.0]),
            )
        })
    }

    /// `H^3`, polar scheme, `T = 200`, `N = 5000`, checkpoint at `T/2`.
    pub fn h3_clt(&self) -> Result<&PathSet> {
        self.cached(&self.h3_clt, || {
            simulate(
                &SimSpec::new(h3(), Scheme::PolarEm, 200.0, 0.01, 5000, self.seed("h3-clt"))
                    .endpoints_only()
                    .with_checkpoints(vec![100.0]),
            )
        })
    }

    /// `H^2`, half-plane scheme, `T = 5`, `N = 10^4`.
    pub fn h2_t5(&self) -> Result<&PathSet> {
        self.cached(&self.h2_t5, || {
            simulate(
                &SimSpec::new(h2(), Scheme::HalfPlaneExact, 5.0, 0.01, 10_000, self.seed("h2-t5")).endpoints_only(),
            )
        })
    }

    /// Evaluate criterion `id` (1 to 12); evaluation errors become a failed result.
    pub fn criterion(&self, id: u8) -> CriterionResult {
        let title = TITLES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
        let out = match id {
            1 => self.drift(),
            2 => self.entropy(),
            3 => self.clt_distance(),
            4 => self.clt_green(),
            5 => self.busemann(),
            6 => self.contraction(),
            7 => self.heat_library(),
            8 => self.martin(),
            9 => self.harmonic_measure(),
            10 => self.mixing(),
            11 => self.equidistribution(),
            12 => self.engineering(),
            _ => Err(Error::config(format!("no criterion {id}"))),
        };
        match out {
            Ok((checks, notes)) => CriterionResult { id, title, checks, notes, error: None },
            Err(e) => CriterionResult { id, title, checks: vec![], notes: vec![], error: Some(e.to_string()) },
        }
    }

    pub fn run_all(&self) -> Vec<CriterionResult> {
        (1..=12).map(|id| self.criterion(id)).collect()
    }

    fn drift(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let mut checks = vec![];
        let mut notes = vec![];
        for (name, set, ell) in [("H3", self.h3_long()?, 2.0), ("H2", self.h2_long()?, 1.0)] {
            let inc = stats::drift_estimate(set, Method::Increment)?;
            let end = stats::drift_estimate(set, Method::Endpoint)?;
            checks.push(Check::around(format!("{name} ell"), inc.value, ell, 0.02));
            notes.push(note(&format!("{name} ell se"), inc.std_error));
            notes.push(note(&format!("{name} ell endpoint"), end.value));
        }
        Ok((checks, notes))
    }

    fn entropy(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let mut checks = vec![];
        let mut notes = vec![];
        for (name, set, h) in [("H3", self.h3_long()?, 4.0), ("H2", self.h2_long()?, 1.0)] {
            let inc = stats::entropy_estimate(set, Method::Increment)?;
            let end = stats::entropy_estimate(set, Method::Endpoint)?;
            let ell = stats::drift_estimate(set, Method::Increment)?;
            checks.push(Check::around(format!("{name} h"), inc.value, h, 0.10));
            notes.push(note(&format!("{name} h se"), inc.std_error));
            notes.push(note(&format!("{name} h endpoint"), end.value));
            notes.push(note(&format!("{name} h - ell^2"), inc.value - ell.value * ell.value));
        }
        Ok((checks, notes))
    }

    fn clt_distance(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let set = self.h3_clt()?;
        let c = model_constants(&set.spec.model)?;
        let rep = stats::clt_test_distance(set, &c, 0.03)?;
        Ok((
            vec![
                Check::at_most("KS", rep.ks_statistic, 0.03),
                Check::between("var (r_T - 2T)/sqrt T", rep.sigma_hat_sq, 1.8, 2.2),
            ],
            vec![note("normalized mean", rep.normalized_mean), note("KS 95% critical", stats::ks_critical_95(rep.n_paths))],
        ))
    }

    fn clt_green(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let set = self.h3_clt()?;
        let c = model_constants(&set.spec.model)?;
        let rep = stats::clt_test_green(set, &c, 0.03)?;
        let h = stats::entropy_estimate(set, Method::Increment)?;
        let dash = stats::identity_dashboard(&stats::DashboardInputs {
            h: Some(h),
            sigma_kappa_sq: Some(EstimateWithCI {
                value: rep.sigma_hat_sq,
                std_error: rep.sigma_hat_sq_se,
                n: rep.n_paths,
                method: Method::Mean,
            }),
            ..Default::default()
        });
        let ineq = dash.checks.iter().find(|k| k.name.starts_with("sigma_kappa")).expect("dashboard row");
        Ok((
            vec![
                Check::at_most("KS", rep.ks_statistic, 0.03),
                Check::between("var (log G + 4T)/sqrt T", rep.sigma_hat_sq, 7.2, 8.8),
                Check::at_least("sigma_kappa^2 - (2h - 3 SE)", ineq.lhs - (ineq.rhs - ineq.band), 0.0),
            ],
            vec![note("normalized mean", rep.normalized_mean), note("h", h.value)],
        ))
    }

    fn busemann(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let t = 20.0;
        let s3 = simulate(&SimSpec::new(h3(), Scheme::PolarEm, t, 0.01, 1000, self.seed("busemann-h3")).endpoints_only())?;
        let xi = BoundaryPoint::from_direction(&[0.3, -0.5, 0.8])?;
        let b3 = stats::busemann_drift_test(&s3, &xi)?;
        let s2 = simulate(
            &SimSpec::new(h2(), Scheme::HalfPlaneExact, t, 0.01, 1000, self.seed("busemann-h2")).endpoints_only(),
        )?;
        let inf = halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Infinity);
        let b2 = stats::busemann_drift_test(&s2, &inf)?;
        Ok((
            vec![
                Check::around("H3 E[b]/T", b3.value / t, 2.0, 0.03),
                Check::around("H2 E[-log Im] - T", b2.value - t, 0.0, 3.0 * b2.std_error),
            ],
            vec![note("H3 se/T", b3.std_error / t), note("H2 se", b2.std_error)],
        ))
    }

    fn contraction(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let set = self.h2_t5()?;
        let xi = halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Real(0.0));
        let eta = halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Infinity);
        let rep = stats::contraction_test(set, &xi, &eta, 0.3)?;
        let g = rep.gromov_gain;
        Ok((
            vec![
                Check::at_least("Gromov gain", g.value, rep.bound - 3.0 * g.std_error),
                Check::at_most("visual ratio", rep.visual_ratio.value, 1.0 - f64::EPSILON),
            ],
            vec![note("fitted rate", rep.fitted_rate), note("gain se", g.std_error)],
        ))
    }

    fn heat_library(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let mut checks = kernel_selfcheck(&Tolerances::default())?
            .into_iter()
            .filter(|c| !c.name.starts_with("Martin"))
            .collect::<Vec<_>>();
        let sf2 = SpaceForm::new(2, 1.0)?;
        let law2 = RadialLaw::new(sf2, 5.0)?;
        let r2: Vec<f64> = self.h2_t5()?.final_distances()?.into_iter().map(|(_, r)| r).collect();
        checks.push(Check::at_most("H2 radial KS", stats::ks_statistic(&r2, |r| law2.cdf(r)), 0.02));
        let sf3 = SpaceForm::new(3, 1.0)?;
        let law3 = RadialLaw::new(sf3, 5.0)?;
        let s3 = simulate(&SimSpec::new(h3(), Scheme::PolarEm, 5.0, 0.01, 10_000, self.seed("radial-h3")).endpoints_only())?;
        let r3: Vec<f64> = s3.final_distances()?.into_iter().map(|(_, r)| r).collect();
        checks.push(Check::at_most("H3 radial KS", stats::ks_statistic(&r3, |r| law3.cdf(r)), 0.02));
        let gb = heat::gaussian_bound_diagnostic(sf3)?;
        Ok((checks, vec![note("Gaussian bound C fit", gb.c_fit), note("Gaussian bound t-slope", gb.slope_t_at_r1)]))
    }

    fn martin(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let checks = martin_checks(0.01, self.seed("martin"))?;
        Ok((checks, vec![]))
    }

    fn harmonic_measure(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let set = simulate(
            &SimSpec::new(h2(), Scheme::HalfPlaneExact, 30.0, 0.01, 10_000, self.seed("harmonic")).endpoints_only(),
        )?;
        let x: Vec<f64> = set.paths.iter().map(|p| p.last_state()[0]).collect();
        let ks = stats::ks_statistic(&x, |t| 0.5 + t.atan() / PI);
        let confident = set.paths.iter().map(|p| sampler::boundary_limit(&set, p)).filter(|e| matches!(e, Ok(e) if e.confident)).count();
        Ok((
            vec![Check::at_most("KS vs Cauchy", ks, 0.02)],
            vec![note("confident fraction", confident as f64 / x.len() as f64)],
        ))
    }

    fn mixing(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let grid: Vec<f64> = (0..=20).map(f64::from).collect();
        let part = PartitionSpec::default();
        let start = FdPoint::new(Complex64::i())?;
        let rep = modular::mixing_tv(&grid, 100_000, &part, start, 0.01, self.seed("mixing"))?;
        let tv20 = rep.tv_at(20.0).expect("grid contains 20");
        Ok((
            vec![
                Check::at_most("TV(20)", tv20, rep.noise_floor + 0.02),
                Check::flag("TV monotone on [2, 20] up to noise", rep.monotone_from(2.0, rep.noise_floor)),
            ],
            vec![note("noise floor", rep.noise_floor), note("fitted rate", rep.fitted_rate.unwrap_or(f64::NAN))],
        ))
    }

    fn equidistribution(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let paths = simulate(
            &SimSpec::new(h2(), Scheme::HalfPlaneExact, 30.0, 0.01, 200, self.seed("equidistribution")).endpoints_only(),
        )?;
        let cusp = |z: Complex64| if z.im > 2.0 { 1.0 } else { 0.0 };
        let vals: Vec<f64> = paths
            .paths
            .iter()
            .map(|p| modular::birkhoff_equidistribution(&paths, p, cusp, 1000.0, 0.01).map(|b| b.value))
            .collect::<Result<_>>()?;
        let (mean, var) = stats::mean_var(&vals)?;
        let mut checks = vec![Check::around("cusp Birkhoff average", mean, 3.0 / (2.0 * PI), 0.02)];
        let mut notes = vec![note("Birkhoff se", (var / vals.len() as f64).sqrt())];
        for (name, set) in [("H3", self.h3_long()?), ("H2", self.h2_long()?)] {
            let dash = dashboard_for(set)?;
            for row in dash.checks.iter().filter(|r| !r.name.starts_with("sigma_kappa")) {
                checks.push(Check::around(format!("{name} {}", row.name), row.lhs - row.rhs, 0.0, row.band));
            }
            if let Some(row) = dash.checks.iter().find(|r| r.name.starts_with("sigma_kappa")) {
                notes.push(note(&format!("{name} sigma_kappa^2 - 2h"), row.lhs - row.rhs));
            }
        }
        Ok((checks, notes))
    }

    fn engineering(&self) -> Result<(Vec<Check>, Vec<Note>)> {
        let mut checks = vec![];
        let mut same = true;
        for scheme in [Scheme::HalfPlaneExact, Scheme::PolarEm, Scheme::HyperboloidEm] {
            let spec = SimSpec::new(h2(), scheme, 2.0, 0.005, 64, self.seed("workers"));
            same &= simulate_with_workers(&spec, 1)?.paths == simulate_with_workers(&spec, 3)?.paths;
        }
        checks.push(Check::flag("paths identical at 1 and 3 workers", same));
        checks.push(Check::flag("CLI outputs identical across reruns and worker counts", rerun_identical(self.seed)?));

        let hp: Vec<f64> = self.h2_t5()?.final_distances()?.into_iter().map(|(_, r)| r).collect();
        let pol = simulate(&SimSpec::new(h2(), Scheme::PolarEm, 5.0, 0.01, 10_000, self.seed("cross-polar")).endpoints_only())?;
        let hyp = simulate(
            &SimSpec::new(h2(), Scheme::HyperboloidEm, 5.0, 0.005, 10_000, self.seed("cross-hyperboloid")).endpoints_only(),
        )?;
        let pol: Vec<f64> = pol.final_distances()?.into_iter().map(|(_, r)| r).collect();
        let hyp: Vec<f64> = hyp.final_distances()?.into_iter().map(|(_, r)| r).collect();
        checks.push(Check::at_most("KS half-plane vs polar", stats::ks_two_sample(&hp, &pol), 0.03));
        checks.push(Check::at_most("KS half-plane vs hyperboloid", stats::ks_two_sample(&hp, &hyp), 0.03));
        checks.push(Check::at_most("KS polar vs hyperboloid", stats::ks_two_sample(&pol, &hyp), 0.03));
        Ok((checks, vec![]))
    }
}

/// Identity dashboard from a constant-curvature set with a checkpoint at `T/2`.
pub fn dashboard_for(set: &PathSet) -> Result<stats::Dashboard> {
    let c = model_constants(&set.spec.model)?;
    let sf = set.spec.model.space_form().expect("constant curvature");
    let t = set.spec.t_end;
    let lg: stats::Sample = set.final_distances()?.into_iter().map(|(id, r)| Ok((id, log_green(sf, r)?))).collect::<Result<_>>()?;
    let kappa = stats::clt_from_values(&lg, t, -c.h * t, c.sigma_kappa_sq, 1.0)?;
    Ok(stats::identity_dashboard(&stats::DashboardInputs {
        lambda0: Some(c.lambda0),
        h_top: Some(c.h_top),
        ell: Some(stats::drift_estimate(set, Method::Increment)?),
        h: Some(stats::entropy_estimate(set, Method::Increment)?),
        upsilon: Some(stats::growth_estimate(set, Method::Increment)?),
        sigma_kappa_sq: Some(EstimateWithCI {
            value: kappa.sigma_hat_sq,
            std_error: kappa.sigma_hat_sq_se,
            n: kappa.n_paths,
            method: Method::Mean,
        }),
    }))
}

/// Run a small configuration three times (1, 1 and 3 workers) and compare
/// every output file except the manifest, which carries the wall time.
fn rerun_identical(seed: u64) -> Result<bool> {
    let base = std::env::temp_dir().join(format!("hypbm-rerun-{}-{seed}", std::process::id()));
    let mut cfg = ExperimentConfig::default();
    cfg.model.kind = ModelKind::H2;
    cfg.simulation.t_end = 2.0;
    cfg.simulation.n_paths = 50;
    cfg.simulation.master_seed = seed;
    cfg.experiments.list = vec![ExperimentKind::Drift, ExperimentKind::HarmonicMeasure, ExperimentKind::Busemann];
    let mut outputs = vec![];
    for (k, workers) in [1usize, 1, 3].into_iter().enumerate() {
        let mut c = cfg.clone();
        c.simulation.workers = workers;
        c.output.dir = base.join(format!("run{k}"));
        crate::runner::run(&c)?;
        let mut files = vec![];
        for name in ["summary.json", "drift.csv", "harmonic-measure.csv", "busemann.csv"] {
            files.push(std::fs::read(c.output.dir.join(name))?);
        }
        outputs.push(files);
    }
    let _ = std::fs::remove_dir_all(&base);
    Ok(outputs[0] == outputs[1] && outputs[0] == outputs[2])
}

/// Closed-form kernel checks: normalization, radial PDE residual, heat
/// kernel comparison and the Martin limit. No simulation.
pub fn kernel_selfcheck(tol: &Tolerances) -> Result<Vec<Check>> {
    let mut checks = vec![];
    for d in [2, 3] {
        let sf = SpaceForm::new(d, 1.0)?;
        for t in [0.1, 1.0, 10.0] {
            let m = heat::radial_mass(sf, t)?;
            checks.push(Check::at_most(format!("normalization d={d} t={t}"), (m - 1.0).abs(), tol.normalization));
        }
        let mut worst = 0.0f64;
        for t in [0.5, 1.0, 3.0] {
            for r in [0.3, 1.0, 2.5, 4.0] {
                worst = worst.max(heat::radial_pde_residual(sf, t, r, 0.01)?);
            }
        }
        checks.push(Check::at_most(format!("PDE residual d={d}"), worst, tol.pde_residual));
        let ts: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let rs: Vec<f64> = (0..=60).map(|i| 0.25 * i as f64).collect();
        let cmp = heat::comparison_check(1.0, 2.0, d, &ts, &rs)?;
        checks.push(Check::at_most(format!("comparison violations d={d}"), cmp.violations as f64, 0.0));
    }
    checks.extend(martin_checks(tol.martin_rel, 0x5eed)?);
    Ok(checks)
}

/// Martin kernel against `G(y, z) / G(x, z)` with `z` at distance 200 from
/// `x` towards `xi`, over 100 random triples in `H^3`.
fn martin_checks(rel: f64, seed: u64) -> Result<Vec<Check>> {
    let sf = SpaceForm::new(3, 1.0)?;
    let mut rng = path_rng(seed, 0);
    let o = HPoint::origin(3, 1.0)?;
    let random_point = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<HPoint> {
        let dir: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let v = HTangent::from_frame(&o, &dir)?;
        geometry::exp_map(&o, &v, 2.0 * rng.random::<f64>())
    };
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_point(&mut rng)?;
        let y = random_point(&mut rng)?;
        let dir: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let xi = BoundaryPoint::from_direction(&dir)?;
        let z = geometry::exp_map(&x, &geometry::direction_to(&x, &xi)?, 200.0)?;
        let ratio = (log_green(sf, geometry::distance(&y, &z)?)? - log_green(sf, geometry::distance(&x, &z)?)?).exp();
        let k = heat::martin_kernel(sf, &x, &y, &xi)?;
        worst = worst.max((k - ratio).abs() / k);
    }
    Ok(vec![Check::at_most("Martin limit relative error (max of 100)", worst, rel)])
}
