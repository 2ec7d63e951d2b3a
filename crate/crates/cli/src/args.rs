use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinvqe::run::{ModeKind, RunConfig};
use spinvqe::{CorrelationKind, Method, Model, OptimizerConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "spinvqe", version, about = "Variational ground states of open spin-1/2 chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one chain and write trace.jsonl, summary.json and params.json.
    Run(RunArgs),
    /// Run the XXZ chain over a grid of anisotropies and compare with ED.
    Sweep(SweepArgs),
    /// Time cost-function evaluations in exact and sampled mode.
    Bench(BenchArgs),
    /// Exact ground-state energies.
    Ed(EdArgs),
    /// Entropy and correlation profiles of a stored or exact state.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Isotropic,
    Xxz,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Isotropic => Model::Isotropic,
            ModelArg::Xxz => Model::Xxz,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => ModeKind::Exact,
            ModeArg::Sampled => ModeKind::Sampled,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    NelderMead,
    Spsa,
    ParameterShiftGd,
    ParameterShiftBfgs,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::NelderMead => Method::NelderMead,
            MethodArg::Spsa => Method::Spsa,
            MethodArg::ParameterShiftGd => Method::ParameterShiftGd,
            MethodArg::ParameterShiftBfgs => Method::ParameterShiftBfgs,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CorrelationArg {
    Zz,
    FullDot,
    Transverse,
}

impl From<CorrelationArg> for CorrelationKind {
    fn from(c: CorrelationArg) -> Self {
        match c {
            CorrelationArg::Zz => CorrelationKind::Zz,
            CorrelationArg::FullDot => CorrelationKind::FullDot,
            CorrelationArg::Transverse => CorrelationKind::Transverse,
        }
    }
}

/// Run settings. A `--config` file supplies a full `RunConfig` as JSON;
/// any flag given on the command line overrides the file.
#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Chain length (even).
    #[arg(long = "L", value_name = "L")]
    pub n_sites: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Layer count; defaults to L/2.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Shots per measurement group.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub ftol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random restarts allowed after a failed attempt.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Also restart while the relative error to ED exceeds this.
    #[arg(long)]
    pub target_rel_err: Option<f64>,
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

impl RunArgs {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => {
                let n = self
                    .n_sites
                    .ok_or_else(|| CliError::usage("--L is required without --config"))?;
                RunConfig::new(Model::Isotropic, n, 1.0, ModeKind::Exact)
            }
        };
        if let Some(m) = self.model {
            config.model = m.into();
        }
        if let Some(n) = self.n_sites {
            config.n_sites = n;
        }
        if let Some(d) = self.delta {
            config.delta = d;
        }
        if let Some(p) = self.p {
            config.p = Some(p);
        }
        if let Some(m) = self.mode {
            config.mode = m.into();
        }
        if let Some(s) = self.shots {
            config.shots = s;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(r) = self.restarts {
            config.restarts = r;
        }
        if let Some(t) = self.target_rel_err {
            config.target_relative_error = Some(t);
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = Some(dir.clone());
        }
        if self.method.is_some() || self.max_iters.is_some() || self.ftol.is_some() {
            let mut opt = match (self.method, &config.optimizer) {
                (Some(m), Some(existing)) if Method::from(m) == existing.method => existing.clone(),
                (Some(m), _) => OptimizerConfig {
                    seed: config.seed,
                    ..OptimizerConfig::new(m.into())
                },
                (None, Some(existing)) => existing.clone(),
                (None, None) => OptimizerConfig {
                    seed: config.seed,
                    ..OptimizerConfig::default_for(&config.estimator()?)
                },
            };
            if let Some(n) = self.max_iters {
                opt.max_iters = n;
            }
            if let Some(f) = self.ftol {
                opt.ftol = f;
            }
            config.optimizer = Some(opt);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub delta_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Worker threads for independent grid points.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Chain lengths, comma or space separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [4, 8, 12, 16])]
    pub sizes: Vec<usize>,
    /// Cost evaluations timed per (L, mode).
    #[arg(long, default_value_t = 50)]
    pub evals: usize,
    #[arg(long, default_value_t = spinvqe::expectation::DEFAULT_SHOTS_PER_GROUP)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Layer count; defaults to L/2.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EdArgs {
    #[arg(long, value_enum, default_value = "xxz")]
    pub model: ModelArg,
    /// Chain lengths, comma or space separated.
    #[arg(long = "L", value_name = "L", value_delimiter = ',', num_args = 1.., required = true)]
    pub sizes: Vec<usize>,
    /// Anisotropies, comma separated (xxz only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [1.0])]
    pub delta: Vec<f64>,
    #[arg(long)]
    pub periodic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum What {
    Entropy,
    Correlation,
    Both,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// params.json written by `run`.
    #[arg(long, conflicts_with = "ed")]
    pub params: Option<PathBuf>,
    /// Analyze the exact ground state of the XXZ chain instead.
    #[arg(long)]
    pub ed: bool,
    #[arg(long = "L", value_name = "L", requires = "ed")]
    pub n_sites: Option<usize>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub what: What,
    #[arg(long, value_enum, default_value = "zz")]
    pub correlation: CorrelationArg,
    /// 1-based site the correlations are measured from.
    #[arg(long, default_value_t = 1)]
    pub reference_site: usize,
    #[arg(long, short = 'o', default_value = ".")]
    pub output_dir: PathBuf,
}
