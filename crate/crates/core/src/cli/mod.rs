//! Command-line front-end: argument definitions, run configuration and file
//! formats. Every command writes its human-readable report to `out`.

mod commands;
pub mod config;
pub mod io;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{cmd_eval, cmd_experiment, cmd_fit, cmd_generate, cmd_heatmap};
pub use config::RunConfig;

use crate::error::Result;
use crate::model::PriorConfig;

#[derive(Parser, Debug)]
#[command(name = "shared-clustering", version, about = "Joint clustering of feature vectors and a network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a synthetic dataset (X.csv, Y.edges, truth.labels)
    Generate(GenerateArgs),
    /// Run the Gibbs sampler and write the MAP labeling, trace and co-clustering
    Fit(FitArgs),
    /// Print the adjusted Rand index between two label files
    Eval(EvalArgs),
    /// Run all methods on repeated datasets of a registry case
    Experiment(ExperimentArgs),
    /// Render a co-clustering matrix as a binary graymap
    Heatmap(HeatmapArgs),
}

#[derive(Args, Debug, Clone)]
#[command(group = clap::ArgGroup::new("source").required(true))]
pub struct GenerateArgs {
    /// Registry case id (1-18)
    #[arg(long, group = "source")]
    pub case: Option<u32>,
    /// JSON file with sizes, means, covariances and psi
    #[arg(long, group = "source")]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Draw labels independently instead of in fixed blocks
    #[arg(long)]
    pub multinomial: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn float_list(s: &str) -> std::result::Result<FloatList, String> {
    config::parse_list(s).map(FloatList)
}

/// Chain and prior settings shared by `fit` and `experiment`; they override
/// values from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct ChainFlags {
    /// `key = value` configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of clusters
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Number of independent chains
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Vector/network weight in [0, 1]
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long, value_parser = float_list, allow_hyphen_values = true)]
    pub mu0: Option<FloatList>,
    #[arg(long, value_parser = float_list)]
    pub t_scale_diag: Option<FloatList>,
    #[arg(long, value_parser = float_list)]
    pub a_dirichlet: Option<FloatList>,
}

impl ChainFlags {
    /// File settings with flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            k: self.k,
            iterations: self.iterations,
            burn_in: self.burn_in,
            n_chains: self.chains,
            seed: self.seed,
            priors: PriorConfig {
                mu0: self.mu0.clone().map(|l| l.0),
                alpha: self.alpha,
                v0: self.v0,
                t_scale_diag: self.t_scale_diag.clone().map(|l| l.0),
                a_dirichlet: self.a_dirichlet.clone().map(|l| l.0),
                beta1: self.beta1,
                beta2: self.beta2,
                eta: self.eta,
            },
        };
        Ok(file.overridden_by(flags))
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Ordering {
    /// Objects grouped by MAP cluster
    #[default]
    Map,
    /// Objects in input order
    Input,
}

#[derive(Args, Debug, Clone)]
#[command(group = clap::ArgGroup::new("inputs").required(true).multiple(true))]
pub struct FitArgs {
    /// Feature vectors, one CSV row per object
    #[arg(long, group = "inputs")]
    pub x: Option<PathBuf>,
    /// Edge list with `n <N>` header
    #[arg(long, group = "inputs")]
    pub y: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainFlags,
    #[arg(long)]
    pub out: PathBuf,
    /// Heatmap ordering
    #[arg(long, value_enum, default_value_t = Ordering::Map)]
    pub order: Ordering,
    /// Also write the selected chain's post-burn-in labelings to samples.csv
    #[arg(long)]
    pub save_samples: bool,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub case: u32,
    /// Number of independent datasets
    #[arg(long, default_value_t = 10)]
    pub datasets: usize,
    #[command(flatten)]
    pub chain: ChainFlags,
    /// Directory for results.csv
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run only the joint model
    #[arg(long)]
    pub no_baselines: bool,
}

#[derive(Args, Debug, Clone)]
#[command(group = clap::ArgGroup::new("matrix").required(true))]
pub struct HeatmapArgs {
    /// Co-clustering matrix CSV
    #[arg(long, group = "matrix")]
    pub coclust: Option<PathBuf>,
    /// Kept labelings, one per line
    #[arg(long, group = "matrix")]
    pub samples: Option<PathBuf>,
    /// Labels used for `map` ordering
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Ordering::Map)]
    pub order: Ordering,
    #[arg(long)]
    pub out: PathBuf,
}

pub const DEFAULT_CHAINS: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Heatmap(a) => cmd_heatmap(&a, out),
    }
}
