//! Experiment configuration: a TOML file with sections `[model]`,
//! `[simulation]`, `[experiments]`, `[tolerances]` and `[output]`.
//!
//! Every field has a default, unknown keys are rejected, and the whole
//! configuration is validated before any simulation starts. The config hash
//! is the 64-bit FNV-1a of the compact JSON serialization of the
//! configuration with fields in declaration order, after clearing the two
//! fields that cannot change results (`output.dir`, `simulation.workers`).

use std::fmt;
use std::hash::Hasher;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, WarpGrid, WarpSurface};
use crate::modular::PartitionSpec;
use crate::sampler::{Scheme, MAX_DT, MAX_DT_HYPERBOLOID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `H^2(-a^2)`
    H2,
    /// `H^3(-a^2)`
    H3,
    /// `H^d(-a^2)` with `dim` given.
    Constant,
    /// Rotationally symmetric surface `dr^2 + f(r)^2 dtheta^2` from a warp grid file.
    Rotsym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Dimension for `kind = "constant"`; ignored otherwise.
    pub dim: usize,
    /// Curvature scale `a` (sectional curvature `-a^2`).
    pub a: f64,
    /// Two-column `r f(r)` file for `kind = "rotsym"`.
    pub warp_grid: Option<PathBuf>,
    /// Pinching bounds `-b^2 <= K <= -a^2` claimed for the warp grid.
    pub pinch_lower: f64,
    pub pinch_upper: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { kind: ModelKind::H3, dim: 3, a: 1.0, warp_grid: None, pinch_lower: 1.0, pinch_upper: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Defaults to `half-plane-exact` for `h2` with `a = 1`, `polar-em` otherwise.
    pub scheme: Option<Scheme>,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses all cores. Never changes any result.
    pub workers: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { scheme: None, t_end: 10.0, dt: 0.01, n_paths: 1000, master_seed: 1, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Drift,
    Entropy,
    CltDistance,
    CltGreen,
    Busemann,
    Contraction,
    Mixing,
    HarmonicMeasure,
    Equidistribution,
    KernelChecks,
    Identities,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::Drift,
        ExperimentKind::Entropy,
        ExperimentKind::CltDistance,
        ExperimentKind::CltGreen,
        ExperimentKind::Busemann,
        ExperimentKind::Contraction,
        ExperimentKind::Mixing,
        ExperimentKind::HarmonicMeasure,
        ExperimentKind::Equidistribution,
        ExperimentKind::KernelChecks,
        ExperimentKind::Identities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Drift => "drift",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::CltDistance => "clt-distance",
            ExperimentKind::CltGreen => "clt-green",
            ExperimentKind::Busemann => "busemann",
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Mixing => "mixing",
            ExperimentKind::HarmonicMeasure => "harmonic-measure",
            ExperimentKind::Equidistribution => "equidistribution",
            ExperimentKind::KernelChecks => "kernel-checks",
            ExperimentKind::Identities => "identities",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown experiment {s:?}")))
    }

    /// Whether the experiment reads the main path set.
    pub fn uses_main_paths(self) -> bool {
        !matches!(
            self,
            ExperimentKind::Mixing | ExperimentKind::Equidistribution | ExperimentKind::KernelChecks
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsConfig {
    pub list: Vec<ExperimentKind>,
    /// Visual parameter of the contraction experiment; 0 picks `1 / (2 delta)`.
    pub contraction_tau: f64,
    pub mixing_paths: usize,
    /// Mixing grid is `0, 1, ..., mixing_t_max`.
    pub mixing_t_max: usize,
    pub partition: PartitionSpec,
    /// Number of half-plane paths whose boundary limits seed the geodesics.
    pub flow_paths: usize,
    /// Length of the half-plane paths read for boundary limits.
    pub flow_path_t: f64,
    pub flow_time: f64,
    pub flow_step: f64,
}

impl Default for ExperimentsConfig {
    fn default() -> Self {
        ExperimentsConfig {
            list: vec![ExperimentKind::Drift],
            contraction_tau: 0.3,
            mixing_paths: 100_000,
            mixing_t_max: 20,
            partition: PartitionSpec::default(),
            flow_paths: 200,
            flow_path_t: 30.0,
            flow_time: 1000.0,
            flow_step: 0.01,
        }
    }
}

/// Thresholds of every pass/fail decision. Sampled quantities pass when
/// `|estimate - target| <= tol + se_multiplier * std_error`; KS tests pass
/// when `KS <= max(tol, ks_coefficient / sqrt(n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub se_multiplier: f64,
    pub ks_coefficient: f64,
    pub drift: f64,
    pub entropy: f64,
    pub clt_ks: f64,
    /// Relative band for the variance rates of the CLT experiments.
    pub clt_variance_rel: f64,
    /// Band on `E[b] / T`.
    pub busemann: f64,
    pub harmonic_ks: f64,
    /// Allowed excess of `TV(t_max)` over the noise floor.
    pub mixing_excess: f64,
    pub equidistribution: f64,
    pub normalization: f64,
    pub pde_residual: f64,
    pub martin_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            se_multiplier: 3.0,
            ks_coefficient: 1.36,
            drift: 0.02,
            entropy: 0.10,
            clt_ks: 0.03,
            clt_variance_rel: 0.10,
            busemann: 0.03,
            harmonic_ks: 0.02,
            mixing_excess: 0.02,
            equidistribution: 0.02,
            normalization: 1e-6,
            pde_residual: 1e-5,
            martin_rel: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("hypbm-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub simulation: SimulationConfig,
    pub experiments: ExperimentsConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.message()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn scheme(&self) -> Scheme {
        self.simulation.scheme.unwrap_or(match self.model.kind {
            ModelKind::H2 if self.model.a == 1.0 => Scheme::HalfPlaneExact,
            _ => Scheme::PolarEm,
        })
    }

    pub fn dim(&self) -> usize {
        match self.model.kind {
            ModelKind::H2 | ModelKind::Rotsym => 2,
            ModelKind::H3 => 3,
            ModelKind::Constant => self.model.dim,
        }
    }

    /// Build the model, reading the warp grid file when needed.
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        match m.kind {
            ModelKind::Rotsym => {
                let path = m
                    .warp_grid
                    .as_ref()
                    .ok_or_else(|| Error::config("model.kind = \"rotsym\" needs model.warp_grid"))?;
                let grid = WarpGrid::load(path)?;
                Ok(ModelSpec::RotSym(Arc::new(WarpSurface::new(grid, m.pinch_lower, m.pinch_upper)?)))
            }
            _ => ModelSpec::constant(self.dim(), m.a),
        }
    }

    /// Reject inconsistent settings; builds the model to do so.
    pub fn validate(&self) -> Result<ModelSpec> {
        let s = &self.simulation;
        let bad = |msg: String| Err(Error::config(msg));
        if !(self.model.a > 0.0 && self.model.a.is_finite()) {
            return bad(format!("model.a must be positive, got {}", self.model.a));
        }
        if self.model.kind == ModelKind::Constant && self.model.dim < 2 {
            return bad(format!("model.dim must be at least 2, got {}", self.model.dim));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            return bad(format!("simulation.t_end must be non-negative, got {}", s.t_end));
        }
        let max_dt = if self.scheme() == Scheme::HyperboloidEm { MAX_DT_HYPERBOLOID } else { MAX_DT };
        if !(s.dt > 0.0 && s.dt <= max_dt) {
            return bad(format!("simulation.dt must lie in (0, {max_dt}] for this scheme, got {}", s.dt));
        }
        if s.n_paths == 0 {
            return bad("simulation.n_paths must be positive".into());
        }
        let e = &self.experiments;
        if e.list.is_empty() {
            return bad("experiments.list is empty".into());
        }
        e.partition.validate()?;
        if !(e.contraction_tau >= 0.0) {
            return bad("experiments.contraction_tau must be non-negative".into());
        }
        if !(e.flow_time > 0.0 && e.flow_step > 0.0 && e.flow_step <= 0.5 && e.flow_path_t > 0.0) {
            return bad("flow settings need flow_time > 0, 0 < flow_step <= 0.5, flow_path_t > 0".into());
        }
        if e.flow_paths < 2 {
            return bad("experiments.flow_paths must be at least 2".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("se_multiplier", t.se_multiplier),
            ("ks_coefficient", t.ks_coefficient),
            ("drift", t.drift),
            ("entropy", t.entropy),
            ("clt_ks", t.clt_ks),
            ("clt_variance_rel", t.clt_variance_rel),
            ("busemann", t.busemann),
            ("harmonic_ks", t.harmonic_ks),
            ("mixing_excess", t.mixing_excess),
            ("equidistribution", t.equidistribution),
            ("normalization", t.normalization),
            ("pde_residual", t.pde_residual),
            ("martin_rel", t.martin_rel),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be a non-negative number, got {v}"));
            }
        }
        let model = self.model_spec()?;
        let needs_cc = [
            ExperimentKind::Entropy,
            ExperimentKind::CltDistance,
            ExperimentKind::CltGreen,
            ExperimentKind::Busemann,
            ExperimentKind::Contraction,
            ExperimentKind::Identities,
        ];
        for k in &e.list {
            if needs_cc.contains(k) && model.space_form().is_none() {
                return bad(format!("experiment {k} needs a constant-curvature model"));
            }
        }
        if e.list.contains(&ExperimentKind::HarmonicMeasure) && self.scheme() != Scheme::HalfPlaneExact {
            return bad("harmonic-measure reads half-plane paths: use model h2, a = 1 and scheme half-plane-exact".into());
        }
        Ok(model)
    }

    /// FNV-1a 64 of the canonical serialization (see module docs).
    pub fn hash(&self) -> u64 {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        c.simulation.workers = 0;
        let text = serde_json::to_string(&c).expect("config serializes");
        let mut h = fnv::FnvHasher::default();
        h.write(text.as_bytes());
        h.finish()
    }
}

/// Annotated default configuration, printed by `print-config-schema`.
pub fn schema_text() -> String {
    let d = ExperimentConfig::default();
    let t = &d.tolerances;
    let e = &d.experiments;
    let names: Vec<String> = ExperimentKind::ALL.iter().map(|k| format!("\"{k}\"")).collect();
    format!(
        r#"# hypbm experiment configuration. Every key is optional; shown values are defaults.

[model]
kind = "h3"              # "h2" | "h3" | "constant" | "rotsym"
dim = 3                  # used by kind = "constant"
a = 1.0                  # sectional curvature -a^2
# warp_grid = "warp.txt" # kind = "rotsym": two columns "r f(r)", f(0) = 0, f'(0) = 1
pinch_lower = 1.0        # rotsym: claimed -b^2 <= K <= -a^2 with a = pinch_lower,
pinch_upper = 1.0        #         b = pinch_upper

[simulation]
# scheme = "polar-em"    # "half-plane-exact" | "polar-em" | "hyperboloid-em";
                         # default half-plane-exact for h2 with a = 1, else polar-em
t_end = {}
dt = {:<20}# at most {MAX_DT} (hyperboloid-em: {MAX_DT_HYPERBOLOID})
n_paths = {}
master_seed = {}
workers = 0              # 0 = all cores; results never depend on it

[experiments]
list = ["drift"]         # any of {}
contraction_tau = {}
mixing_paths = {}
mixing_t_max = {}
flow_paths = {}
flow_path_t = {}
flow_time = {}
flow_step = {}

[experiments.partition] # modular-surface cells: arc + rows x cols + cusp
y_cap = {}
rows = {}
cols = {}

[tolerances]
se_multiplier = {:<9}# sampled checks pass when |est - target| <= tol + k * se
ks_coefficient = {:<8}# KS checks pass when KS <= max(tol, c / sqrt(n))
drift = {}
entropy = {}
clt_ks = {}
clt_variance_rel = {}
busemann = {}
harmonic_ks = {}
mixing_excess = {}
equidistribution = {}
normalization = {:e}
pde_residual = {:e}
martin_rel = {}

[output]
dir = "hypbm-out"        # overridden by HYPBM_OUTPUT_DIR, then by --output-dir
"#,
        d.simulation.t_end,
        d.simulation.dt,
        d.simulation.n_paths,
        d.simulation.master_seed,
        names.join(", "),
        e.contraction_tau,
        e.mixing_paths,
        e.mixing_t_max,
        e.flow_paths,
        e.flow_path_t,
        e.flow_time,
        e.flow_step,
        e.partition.y_cap,
        e.partition.rows,
        e.partition.cols,
        t.se_multiplier,
        t.ks_coefficient,
        t.drift,
        t.entropy,
        t.clt_ks,
        t.clt_variance_rel,
        t.busemann,
        t.harmonic_ks,
        t.mixing_excess,
        t.equidistribution,
        t.normalization,
        t.pde_residual,
        t.martin_rel,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_parses_to_defaults() {
        let c = ExperimentConfig::from_toml(&schema_text()).unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn round_trip_and_hash() {
        let mut c = ExperimentConfig::default();
        c.experiments.list = vec![ExperimentKind::Drift, ExperimentKind::Mixing];
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.output.dir = "elsewhere".into();
        d.simulation.workers = 7;
        assert_eq!(d.hash(), c.hash());
        d.simulation.master_seed = 2;
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let err = |text: &str| ExperimentConfig::from_toml(text).and_then(|c| c.validate().map(|_| ()));
        assert!(matches!(err("[simulation]\ndt = 0.5"), Err(Error::Config(_))));
        assert!(matches!(err("[model]\na = -1.0"), Err(Error::Config(_))));
        assert!(matches!(err("[model]\ncolour = 1"), Err(Error::Config(_))));
        assert!(matches!(err("[experiments]\nlist = [\"nope\"]"), Err(Error::Config(_))));
        assert!(matches!(
            err("[model]\nkind = \"h3\"\n[experiments]\nlist = [\"harmonic-measure\"]"),
            Err(Error::Config(_))
        ));
        assert!(err("[model]\nkind = \"h2\"\n[experiments]\nlist = [\"harmonic-measure\"]").is_ok());
    }
}
