//! `hypbm` command-line front end.
//!
//! Exit codes: 0 all asserted criteria pass, 1 some criterion failed,
//! 2 invalid configuration, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hypbm::config::{ExperimentConfig, ExperimentKind, ModelKind};
use hypbm::runner::{self, EXIT_CRITERION_FAILED, EXIT_OK};
use hypbm::sampler::Scheme;
use hypbm::Error;

/// Environment variable overriding the output directory of the config file.
const OUTPUT_ENV: &str = "HYPBM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "hypbm", version, about = "Brownian motion on hyperbolic spaces and the modular surface")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiments, or a preset.
    Run(RunArgs),
    /// Closed-form heat, Green and Martin kernel checks (no simulation).
    KernelSelfcheck,
    /// Print the annotated default configuration file.
    PrintConfigSchema,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// The twelve acceptance criteria at their stated scales.
    Acceptance,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    H2,
    H3,
    Constant,
    Rotsym,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    HalfPlaneExact,
    PolarEm,
    HyperboloidEm,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    warp_grid: Option<PathBuf>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Time horizon.
    #[arg(long = "T", visible_alias = "t-end")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated experiment names.
    #[arg(long, value_delimiter = ',')]
    experiments: Option<Vec<String>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> hypbm::Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = args.model {
        c.model.kind = match m {
            ModelArg::H2 => ModelKind::H2,
            ModelArg::H3 => ModelKind::H3,
            ModelArg::Constant => ModelKind::Constant,
            ModelArg::Rotsym => ModelKind::Rotsym,
        };
    }
    if let Some(d) = args.dim {
        c.model.dim = d;
    }
    if let Some(a) = args.a {
        c.model.a = a;
    }
    if let Some(w) = &args.warp_grid {
        c.model.warp_grid = Some(w.clone());
    }
    if let Some(s) = args.scheme {
        c.simulation.scheme = Some(match s {
            SchemeArg::HalfPlaneExact => Scheme::HalfPlaneExact,
            SchemeArg::PolarEm => Scheme::PolarEm,
            SchemeArg::HyperboloidEm => Scheme::HyperboloidEm,
        });
    }
    if let Some(t) = args.t_end {
        c.simulation.t_end = t;
    }
    if let Some(dt) = args.dt {
        c.simulation.dt = dt;
    }
    if let Some(n) = args.n_paths {
        c.simulation.n_paths = n;
    }
    if let Some(s) = args.seed {
        c.simulation.master_seed = s;
    }
    if let Some(w) = args.workers {
        c.simulation.workers = w;
    }
    if let Some(list) = &args.experiments {
        c.experiments.list = list.iter().map(|s| ExperimentKind::parse(s.trim())).collect::<hypbm::Result<_>>()?;
    }
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        c.output.dir = PathBuf::from(dir);
    }
    if let Some(dir) = &args.output_dir {
        c.output.dir = dir.clone();
    }
    Ok(c)
}

fn fail(e: &Error) -> i32 {
    eprintln!("hypbm: {e}");
    runner::exit_code_for(e)
}

fn run(args: &RunArgs) -> i32 {
    let config = match build_config(args) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(Preset::Acceptance) = args.preset {
        let dir = config.output.dir.clone();
        let result = runner::run_acceptance(config.simulation.master_seed, config.simulation.workers, &dir, |r| {
            println!("{}", r.line())
        });
        return match result {
            Ok(out) => {
                println!("outputs written to {}", dir.display());
                if out.all_pass {
                    EXIT_OK
                } else {
                    EXIT_CRITERION_FAILED
                }
            }
            Err(e) => fail(&e),
        };
    }
    match runner::run(&config) {
        Ok(out) => {
            for e in &out.experiments {
                println!("[{}] {}", if e.pass { "PASS" } else { "FAIL" }, e.experiment);
            }
            println!("config hash {}; outputs written to {}", out.config_hash, config.output.dir.display());
            out.exit_code()
        }
        Err(e) => fail(&e),
    }
}

fn kernel_selfcheck() -> i32 {
    match hypbm::acceptance::kernel_selfcheck(&Default::default()) {
        Ok(checks) => {
            for c in &checks {
                let bound = c.hi.map_or(String::new(), |h| format!(" (<= {h:e})"));
                println!("[{}] {} = {:e}{bound}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value);
            }
            if checks.iter().all(|c| c.pass) {
                EXIT_OK
            } else {
                EXIT_CRITERION_FAILED
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(args) => run(args),
        Command::KernelSelfcheck => kernel_selfcheck(),
        Command::PrintConfigSchema => {
            print!("{}", hypbm::config::schema_text());
            EXIT_OK
        }
    };
    ExitCode::from(code as u8)
}
