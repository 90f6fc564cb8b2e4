//! Experiment orchestration and output files.
//!
//! A run writes into the output directory:
//! - `manifest.json`: configuration, config hash, master seed, crate
//!   version, wall time;
//! - `<experiment>.csv`: one row per path (or grid point, or check), with a
//!   trailing `# summary:` comment line;
//! - for the acceptance preset, `acceptance.csv` instead: one row per check
//!   and per reported note (empty `pass` column);
//! - `summary.json`: pass/fail and summary fields per experiment.
//!
//! All numbers are written with 17 significant digits. Worker count never
//! changes any emitted number; only the manifest's wall time differs
//! between reruns.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::acceptance::{self, Acceptance, CriterionResult};
use crate::config::{ExperimentConfig, ExperimentKind, Tolerances};
use crate::error::{Error, Result};
use crate::geometry::{default_tau, halfplane, BoundaryPoint};
use crate::heat::{log_green, model_constants};
use crate::models::ModelSpec;
use crate::modular::{self, FdPoint};
use crate::rng::derive_seed;
use crate::sampler::{self, simulate, PathSet, Scheme, SimSpec};
use crate::stats::{self, EstimateWithCI, Method};

/// Exit codes of the CLI.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERION_FAILED: i32 = 1;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERIC_FAILURE: i32 = 3;

/// Exit code for an error: configuration problems give 2, the rest 3.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parameter(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_NUMERIC_FAILURE,
    }
}

/// Full-precision number formatting for CSV output.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub experiment: ExperimentKind,
    pub pass: bool,
    pub summary: Value,
    #[serde(skip)]
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub config_hash: String,
    pub all_pass: bool,
    pub experiments: Vec<ExperimentOutput>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            EXIT_OK
        } else {
            EXIT_CRITERION_FAILED
        }
    }
}

fn hash_hex(h: u64) -> String {
    format!("{h:016x}")
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Validate, execute every listed experiment, and return the results without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let model = config.validate()?;
    let start = Instant::now();
    let hash = config.hash();
    let experiments = with_pool(config.simulation.workers, || -> Result<Vec<ExperimentOutput>> {
        let needs_paths = config.experiments.list.iter().any(|k| k.uses_main_paths());
        let main = if needs_paths { Some(main_paths(config, &model, hash)?) } else { None };
        let mut out = vec![];
        for &kind in &config.experiments.list {
            let mut exp = run_experiment(kind, config, &model, main.as_ref())?;
            if let Value::Object(m) = &mut exp.summary {
                m.insert("experiment".into(), json!(kind));
                m.insert("config_hash".into(), json!(hash_hex(hash)));
                m.insert("pass".into(), json!(exp.pass));
            }
            out.push(exp);
        }
        Ok(out)
    })??;
    Ok(RunOutput {
        config_hash: hash_hex(hash),
        all_pass: experiments.iter().all(|e| e.pass),
        experiments,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Execute and write all artifacts to `config.output.dir`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let out = execute(config)?;
    write_outputs(config, &out, &config.output.dir)?;
    Ok(out)
}

fn manifest(config: &ExperimentConfig, hash: &str, wall_time_s: f64, preset: Option<&str>) -> Value {
    json!({
        "config": config,
        "config_hash": hash,
        "master_seed": config.simulation.master_seed,
        "preset": preset,
        "versions": { "hypbm": env!("CARGO_PKG_VERSION") },
        "wall_time_s": wall_time_s,
    })
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_outputs(config: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_json(&dir.join("manifest.json"), &manifest(config, &out.config_hash, out.wall_time_s, None))?;
    for e in &out.experiments {
        std::fs::write(dir.join(format!("{}.csv", e.experiment)), &e.csv)?;
    }
    write_json(&dir.join("summary.json"), out)
}

fn main_paths(config: &ExperimentConfig, model: &ModelSpec, hash: u64) -> Result<PathSet> {
    let s = &config.simulation;
    let mut spec = SimSpec::new(model.clone(), config.scheme(), s.t_end, s.dt, s.n_paths, s.master_seed).endpoints_only();
    if s.t_end > 0.0 {
        spec = spec.with_checkpoints(vec![0.5 * s.t_end]);
    }
    spec.config_hash = hash;
    simulate(&spec)
}

fn need_paths(main: Option<&PathSet>) -> &PathSet {
    main.expect("main path set is simulated when an experiment reads it")
}

fn need_positive_t(set: &PathSet, what: &str) -> Result<f64> {
    let t = set.spec.t_end;
    if !(t > 0.0) {
        return Err(Error::config(format!("{what} needs simulation.t_end > 0")));
    }
    Ok(t)
}

fn ks_threshold(tol: f64, tols: &Tolerances, n: usize) -> f64 {
    tol.max(tols.ks_coefficient / (n as f64).sqrt())
}

fn estimate_json(e: &EstimateWithCI) -> Value {
    json!({ "value": e.value, "std_error": e.std_error, "n": e.n, "method": e.method })
}

fn summary_line(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# summary: {}\n", body.join(","))
}

fn run_experiment(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    model: &ModelSpec,
    main: Option<&PathSet>,
) -> Result<ExperimentOutput> {
    let tol = &config.tolerances;
    let k = tol.se_multiplier;
    let out = |pass: bool, summary: Value, csv: String| Ok(ExperimentOutput { experiment: kind, pass, summary, csv });
    match kind {
        ExperimentKind::Drift | ExperimentKind::Entropy => {
            let set = need_paths(main);
            need_positive_t(set, kind.name())?;
            let (inc, end, targets) = if kind == ExperimentKind::Drift {
                let targets = match model {
                    ModelSpec::ConstantCurvature(sf) => (sf.growth(), sf.growth()),
                    ModelSpec::RotSym(w) => w.bounds(),
                };
                (stats::drift_estimate(set, Method::Increment)?, stats::drift_estimate(set, Method::Endpoint)?, targets)
            } else {
                let h = model_constants(model)?.h;
                (stats::entropy_estimate(set, Method::Increment)?, stats::entropy_estimate(set, Method::Endpoint)?, (h, h))
            };
            let (lo, hi) = targets;
            let slack = tol_for(kind, tol) + k * inc.std_error;
            let pass = inc.value >= lo - slack && inc.value <= hi + slack;
            let t = set.spec.t_end;
            let f = functional(kind, model)?;
            let mut csv = String::from(if kind == ExperimentKind::Drift {
                "path_id,r_half,r_T\n"
            } else {
                "path_id,neg_log_green_half,neg_log_green_T\n"
            });
            let half = set.distances_at(0.5 * t)?;
            let end_d = set.distances_at(t)?;
            for ((id, a), (_, b)) in half.iter().zip(&end_d) {
                let _ = writeln!(csv, "{id},{},{}", num(f(*a)?), num(f(*b)?));
            }
            csv.push_str(&summary_line(&[
                ("increment", num(inc.value)),
                ("increment_se", num(inc.std_error)),
                ("endpoint", num(end.value)),
                ("endpoint_se", num(end.std_error)),
                ("target_lo", num(lo)),
                ("target_hi", num(hi)),
                ("pass", pass.to_string()),
            ]));
            out(
                pass,
                json!({ "increment": estimate_json(&inc), "endpoint": estimate_json(&end), "target": [lo, hi],
                        "excluded_paths": set.n_excluded() }),
                csv,
            )
        }
        ExperimentKind::CltDistance | ExperimentKind::CltGreen => {
            let set = need_paths(main);
            let c = model_constants(model)?;
            let n = set.complete().count();
            let thr = ks_threshold(tol.clt_ks, tol, n);
            let rep = if kind == ExperimentKind::CltDistance {
                stats::clt_test_distance(set, &c, thr)?
            } else {
                stats::clt_test_green(set, &c, thr)?
            };
            let var_ok = (rep.sigma_hat_sq / rep.predicted_sigma_sq - 1.0).abs() <= tol.clt_variance_rel;
            let mut pass = rep.pass && var_ok;
            let mut extra = json!({});
            if kind == ExperimentKind::CltGreen {
                let h = stats::entropy_estimate(set, Method::Increment)?;
                let lower = 2.0 * h.value - k * (rep.sigma_hat_sq_se.powi(2) + (2.0 * h.std_error).powi(2)).sqrt();
                let ineq = rep.sigma_hat_sq >= lower;
                pass &= ineq;
                extra = json!({ "h_increment": estimate_json(&h), "sigma_kappa_sq_lower": lower, "inequality_pass": ineq });
            }
            let t = set.spec.t_end;
            let sf = model.space_form().expect("validated constant curvature");
            let center = if kind == ExperimentKind::CltDistance { c.ell * t } else { -c.h * t };
            let scale = (rep.predicted_sigma_sq * t).sqrt();
            let mut csv = String::from(if kind == ExperimentKind::CltDistance {
                "path_id,r_T,normalized\n"
            } else {
                "path_id,log_green_T,normalized\n"
            });
            for (id, r) in set.final_distances()? {
                let y = if kind == ExperimentKind::CltDistance { r } else { log_green(sf, r)? };
                let _ = writeln!(csv, "{id},{},{}", num(y), num((y - center) / scale));
            }
            csv.push_str(&summary_line(&[
                ("ks", num(rep.ks_statistic)),
                ("ks_threshold", num(thr)),
                ("sigma_hat_sq", num(rep.sigma_hat_sq)),
                ("predicted_sigma_sq", num(rep.predicted_sigma_sq)),
                ("pass", pass.to_string()),
            ]));
            out(pass, json!({ "report": rep, "variance_pass": var_ok, "extra": extra }), csv)
        }
        ExperimentKind::Busemann => {
            let set = need_paths(main);
            let t = need_positive_t(set, "busemann")?;
            let (xi, label) = busemann_target(set)?;
            let sample = stats::busemann_sample(set, t, &xi)?;
            let e = EstimateWithCI::from_sample(&sample, Method::Mean)?;
            let ell = model_constants(model)?.ell;
            let pass = (e.value / t - ell).abs() <= tol.busemann + k * e.std_error / t;
            let mut csv = String::from("path_id,busemann_T\n");
            for (id, v) in &sample {
                let _ = writeln!(csv, "{id},{}", num(*v));
            }
            csv.push_str(&summary_line(&[
                ("mean_over_T", num(e.value / t)),
                ("se_over_T", num(e.std_error / t)),
                ("target", num(ell)),
                ("pass", pass.to_string()),
            ]));
            out(pass, json!({ "estimate": estimate_json(&e), "per_unit_time": e.value / t, "xi": label }), csv)
        }
        ExperimentKind::Contraction => {
            let set = need_paths(main);
            let (xi, eta) = antipodal_pair(set)?;
            let sf = model.space_form().expect("validated constant curvature");
            let tau = if config.experiments.contraction_tau > 0.0 { config.experiments.contraction_tau } else { default_tau(sf.a) };
            let rep = stats::contraction_test(set, &xi, &eta, tau)?;
            let g = rep.gromov_gain;
            let gain_ok = g.value >= rep.bound - k * g.std_error;
            let pass = gain_ok && rep.ratio_pass;
            let mut csv = String::from("quantity,value,std_error\n");
            let _ = writeln!(csv, "gromov_gain,{},{}", num(g.value), num(g.std_error));
            let _ = writeln!(csv, "bound,{},{}", num(rep.bound), num(0.0));
            let _ = writeln!(csv, "visual_ratio,{},{}", num(rep.visual_ratio.value), num(rep.visual_ratio.std_error));
            let _ = writeln!(csv, "fitted_rate,{},{}", num(rep.fitted_rate), num(0.0));
            csv.push_str(&summary_line(&[("tau", num(tau)), ("pass", pass.to_string())]));
            out(pass, json!({ "report": rep, "tau": tau, "gain_pass": gain_ok }), csv)
        }
        ExperimentKind::Mixing => {
            let e = &config.experiments;
            let grid: Vec<f64> = (0..=e.mixing_t_max).map(|t| t as f64).collect();
            let start = FdPoint::new(Complex64::i())?;
            let seed = derive_seed(config.simulation.master_seed, "mixing");
            let rep = modular::mixing_tv(&grid, e.mixing_paths, &e.partition, start, config.simulation.dt, seed)?;
            let t_max = e.mixing_t_max as f64;
            let last = *rep.tv.last().expect("non-empty grid");
            let from = 2.0f64.min(t_max);
            let pass = last <= rep.noise_floor + tol.mixing_excess && rep.monotone_from(from, rep.noise_floor);
            let mut csv = String::from("t,tv,noise_floor\n");
            for (t, v) in rep.t.iter().zip(&rep.tv) {
                let _ = writeln!(csv, "{},{},{}", num(*t), num(*v), num(rep.noise_floor));
            }
            csv.push_str(&summary_line(&[
                ("fitted_rate", rep.fitted_rate.map_or("nan".into(), num)),
                ("pass", pass.to_string()),
            ]));
            out(pass, json!({ "report": rep, "partition": e.partition, "areas": e.partition.areas() }), csv)
        }
        ExperimentKind::HarmonicMeasure => {
            let set = need_paths(main);
            let s0 = set.paths[0].state(0);
            let (x0, y0) = (s0[0], s0[1].exp());
            let xs: Vec<(u64, f64, bool)> = set
                .complete()
                .map(|p| Ok((p.path_id, p.last_state()[0], sampler::boundary_limit(set, p)?.confident)))
                .collect::<Result<_>>()?;
            let vals: Vec<f64> = xs.iter().map(|v| v.1).collect();
            let ks = stats::ks_statistic(&vals, |t| 0.5 + ((t - x0) / y0).atan() / PI);
            let thr = ks_threshold(tol.harmonic_ks, tol, vals.len());
            let pass = ks <= thr;
            let mut csv = String::from("path_id,x_T,confident\n");
            for (id, x, c) in &xs {
                let _ = writeln!(csv, "{id},{},{c}", num(*x));
            }
            let confident = xs.iter().filter(|v| v.2).count() as f64 / xs.len() as f64;
            csv.push_str(&summary_line(&[("ks", num(ks)), ("ks_threshold", num(thr)), ("pass", pass.to_string())]));
            out(pass, json!({ "ks": ks, "ks_threshold": thr, "confident_fraction": confident }), csv)
        }
        ExperimentKind::Equidistribution => {
            let e = &config.experiments;
            let h2 = ModelSpec::constant(2, 1.0)?;
            let seed = derive_seed(config.simulation.master_seed, "equidistribution");
            let set = simulate(
                &SimSpec::new(h2, Scheme::HalfPlaneExact, e.flow_path_t, config.simulation.dt, e.flow_paths, seed)
                    .endpoints_only(),
            )?;
            let cusp = |z: Complex64| if z.im > 2.0 { 1.0 } else { 0.0 };
            let mut csv = String::from("path_id,boundary_x,cusp_average,confident\n");
            let mut sample = stats::Sample::new();
            let mut n_confident = 0usize;
            for p in &set.paths {
                let b = modular::birkhoff_equidistribution(&set, p, cusp, e.flow_time, e.flow_step)?;
                let _ = writeln!(csv, "{},{},{},{}", p.path_id, num(p.last_state()[0]), num(b.value), b.confident);
                sample.push((p.path_id, b.value));
                n_confident += b.confident as usize;
            }
            let est = EstimateWithCI::from_sample(&sample, Method::Mean)?;
            let target = 3.0 / (2.0 * PI);
            let pass = est.within(target, tol.equidistribution, k);
            csv.push_str(&summary_line(&[
                ("mean", num(est.value)),
                ("se", num(est.std_error)),
                ("target", num(target)),
                ("pass", pass.to_string()),
            ]));
            out(
                pass,
                json!({ "estimate": estimate_json(&est), "target": target,
                        "confident_fraction": n_confident as f64 / set.paths.len() as f64 }),
                csv,
            )
        }
        ExperimentKind::KernelChecks => {
            let checks = acceptance::kernel_selfcheck(tol)?;
            let pass = checks.iter().all(|c| c.pass);
            out(pass, json!({ "checks": checks }), checks_csv(&checks))
        }
        ExperimentKind::Identities => {
            let set = need_paths(main);
            need_positive_t(set, "identities")?;
            let dash = acceptance::dashboard_for(set)?;
            let pass = dash.pass();
            let mut csv = String::from("identity,lhs,rhs,band,pass\n");
            for r in &dash.checks {
                let _ = writeln!(csv, "{},{},{},{},{}", r.name, num(r.lhs), num(r.rhs), num(r.band), r.pass == Some(true));
            }
            csv.push_str(&summary_line(&[("pass", pass.to_string())]));
            out(pass, json!({ "dashboard": dash }), csv)
        }
    }
}

fn tol_for(kind: ExperimentKind, tol: &Tolerances) -> f64 {
    match kind {
        ExperimentKind::Drift => tol.drift,
        _ => tol.entropy,
    }
}

/// Per-path functional written to the drift and entropy CSVs.
fn functional(kind: ExperimentKind, model: &ModelSpec) -> Result<impl Fn(f64) -> Result<f64>> {
    let sf = match kind {
        ExperimentKind::Entropy => Some(model.space_form().ok_or_else(|| Error::Unsupported("entropy".into()))?),
        _ => None,
    };
    Ok(move |r: f64| match sf {
        Some(sf) => Ok(-log_green(sf, r)?),
        None => Ok(r),
    })
}

fn busemann_target(set: &PathSet) -> Result<(BoundaryPoint, String)> {
    if set.spec.scheme == Scheme::HalfPlaneExact {
        return Ok((halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Infinity), "infinity".into()));
    }
    let d = set.spec.model.dim();
    let mut dir = vec![0.0; d];
    dir[0] = 1.0;
    Ok((BoundaryPoint::from_direction(&dir)?, "e1".into()))
}

/// Two boundary points seen in opposite directions from the start.
fn antipodal_pair(set: &PathSet) -> Result<(BoundaryPoint, BoundaryPoint)> {
    if set.spec.scheme == Scheme::HalfPlaneExact {
        let s = set.paths[0].state(0);
        let (x0, y0) = (s[0], s[1].exp());
        return Ok((
            halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Real(x0 - y0)),
            halfplane::boundary_to_null(halfplane::HalfPlaneBoundary::Real(x0 + y0)),
        ));
    }
    let start = set.point(&set.paths[0], 0)?;
    let frame = start.tangent_frame();
    let v = frame[0].vec().to_vec();
    let w: Vec<f64> = v.iter().map(|x| -x).collect();
    let xi = BoundaryPoint::from_ray(&crate::geometry::HTangent::unit_from_ambient(&start, &v)?)?;
    let eta = BoundaryPoint::from_ray(&crate::geometry::HTangent::unit_from_ambient(&start, &w)?)?;
    Ok((xi, eta))
}

fn checks_csv(checks: &[acceptance::Check]) -> String {
    let mut csv = String::from("check,value,lo,hi,pass\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for c in checks {
        let _ = writeln!(csv, "{},{},{},{},{}", c.name, num(c.value), opt(c.lo), opt(c.hi), c.pass);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    csv.push_str(&summary_line(&[
        ("checks", checks.len().to_string()),
        ("passed", passed.to_string()),
        ("pass", (passed == checks.len()).to_string()),
    ]));
    csv
}

/// Result of the acceptance preset.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceOutput {
    pub all_pass: bool,
    pub criteria: Vec<CriterionResult>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Run the twelve acceptance criteria and write `manifest.json`,
/// `acceptance.csv` and `summary.json` to `dir`.
pub fn run_acceptance(master_seed: u64, workers: usize, dir: &Path, mut log: impl FnMut(&CriterionResult) + Send) -> Result<AcceptanceOutput> {
    let start = Instant::now();
    let criteria = with_pool(workers, || {
        let acc = Acceptance::new(master_seed);
        (1..=12)
            .map(|id| {
                let r = acc.criterion(id);
                log(&r);
                r
            })
            .collect::<Vec<_>>()
    })?;
    let out = AcceptanceOutput {
        all_pass: criteria.iter().all(|c| c.pass()),
        criteria,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    std::fs::create_dir_all(dir)?;
    let mut cfg = ExperimentConfig::default();
    cfg.simulation.master_seed = master_seed;
    cfg.simulation.workers = workers;
    cfg.output.dir = dir.to_path_buf();
    write_json(&dir.join("manifest.json"), &manifest(&cfg, &hash_hex(cfg.hash()), out.wall_time_s, Some("acceptance")))?;
    let mut csv = String::from("criterion,title,check,value,lo,hi,pass\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for c in &out.criteria {
        for k in &c.checks {
            let _ = writeln!(csv, "{},{},{},{},{},{},{}", c.id, c.title, k.name, num(k.value), opt(k.lo), opt(k.hi), k.pass);
        }
        if let Some(e) = &c.error {
            let _ = writeln!(csv, "{},{},error: {},,,,false", c.id, c.title, e.replace(',', ";"));
        }
        for n in &c.notes {
            let _ = writeln!(csv, "{},{},note: {},{},,,", c.id, c.title, n.name, num(n.value));
        }
    }
    std::fs::write(dir.join("acceptance.csv"), csv)?;
    write_json(&dir.join("summary.json"), &out)?;
    Ok(out)
}
