//! `stratmed`: fit, summarize and simulate principal-stratum mediation
//! models for semi-competing risks data.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "stratmed",
    version,
    about = "Principal-stratum mediation analysis for semi-competing risks"
)]
pub struct Cli {
    /// Worker threads for bootstrap and replicate loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct EmArgs {
    /// Convergence tolerance on the largest parameter or hazard-jump change.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Additional jittered starting points; the best log-likelihood is kept.
    #[arg(long, default_value_t = 0)]
    pub extra_starts: usize,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Time grid as `start:end:count` or a comma-separated list.
    /// Defaults to 100 points from 0 to the 95th percentile of follow-up.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the model; writes fit.json, hazards.csv, posteriors.csv, loglik_trace.csv.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Center and scale every covariate column before fitting. Profiles
        /// are still given on the original scale.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        out_dir: PathBuf,
        /// Start from the artifacts in this directory.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Seed for jittered extra starts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Effect curves; writes effects.csv.
    Effects {
        #[arg(long)]
        input: PathBuf,
        /// Center and scale every covariate column before fitting. Profiles
        /// are still given on the original scale.
        #[arg(long)]
        standardize: bool,
        /// Directory with fit artifacts; the model is refit when omitted.
        #[arg(long)]
        fit_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Covariate profile such as `x1=0.5,x2=0.5`; repeat for several.
        #[arg(long)]
        profile: Vec<String>,
        /// Bootstrap resamples for bands (0 = none).
        #[arg(long, default_value_t = 0)]
        bootstrap_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Model-based versus Kaplan-Meier survival by arm; writes survival_overlay.csv.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        /// Center and scale every covariate column before fitting. Profiles
        /// are still given on the original scale.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        fit_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Simulate from the reference design; writes data.csv and truth.csv.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// JSON generative spec replacing the reference design (its n and
        /// seed are overridden by the flags).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Upper end of the uniform censoring distribution.
        #[arg(long)]
        censor_max: Option<f64>,
        #[arg(long, conflicts_with = "censor_max")]
        no_censoring: bool,
    },
    /// Monte Carlo reproduction of the parameter or effect simulation table.
    Reproduce {
        #[arg(value_enum)]
        table: TableKind,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 100)]
        bootstrap_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Refit with treatment labels swapped; writes sensitivity.json.
    Sensitivity {
        #[arg(long)]
        input: PathBuf,
        /// Center and scale every covariate column before fitting. Profiles
        /// are still given on the original scale.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Bootstrap standard errors, intervals and Wald tests; writes
    /// bootstrap.csv and bootstrap.json.
    Bootstrap {
        #[arg(long)]
        input: PathBuf,
        /// Center and scale every covariate column before fitting. Profiles
        /// are still given on the original scale.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        fit_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        bootstrap_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Percentile intervals instead of estimate ± 1.96 SE.
        #[arg(long)]
        percentile: bool,
        /// Start every resample refit from the base fit (faster; may reach a
        /// different local maximum than the default start).
        #[arg(long)]
        warm_start: bool,
        #[arg(long)]
        profile: Vec<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        em: EmArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Table1,
    Table2,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
