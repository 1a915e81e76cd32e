use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(
    name = "aoi-corr",
    version,
    about = "Age of Information and state-error analysis for correlated sensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON system configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimOptions {
    /// Base seed. Required so every run is reproducible.
    #[arg(long)]
    pub seed: u64,
    /// Simulated time per replication.
    #[arg(long, default_value_t = 1e6)]
    pub horizon: f64,
    /// Discarded initial time; defaults to 1% of the horizon.
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Independent replications, run in parallel.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form ages, error ratios and derived rates as JSON.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Include each process's embedded chain (states, P_M, holding times, π).
        #[arg(long)]
        dump_chain: bool,
    },
    /// Monte Carlo simulation; writes per-run and aggregated metrics as JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimOptions,
        /// Buffer slots in front of the server.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..=1))]
        buffer: u32,
        /// CSV event log of the single replication.
        #[arg(long)]
        event_log: Option<PathBuf>,
    },
    /// Analytic vs simulated metrics as CSV; exit code 3 if any is out of tolerance.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimOptions,
        /// Relative tolerance for ages and moments, absolute for error ratios.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// One CSV row of analytic ages and error ratios per grid value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// VAR:LO:HI:N[:log] with VAR one of lambda_I, mu, zeta_J, pc_I_J, p.
        #[arg(long)]
        sweep: SweepSpec,
    },
    /// Sensing-probability allocation; JSON, or CSV when sweeping.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated per-sensor budgets.
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        /// Grid step per probability coordinate.
        #[arg(long, default_value_t = aoi_corr::opt::DEFAULT_STEP)]
        step: f64,
        #[arg(long, value_enum, default_value_t = ObjectiveKind::Aoi)]
        objective: ObjectiveKind,
        #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
        method: MethodChoice,
        /// Re-solve at every grid value of one variable.
        #[arg(long)]
        sweep: Option<SweepSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Linear,
    Qconvex,
    Qconcave,
}

impl From<Family> for aoi_corr::opt::ConstraintKind {
    fn from(f: Family) -> Self {
        match f {
            Family::Linear => aoi_corr::opt::ConstraintKind::Linear,
            Family::Qconvex => aoi_corr::opt::ConstraintKind::QuadraticConvex,
            Family::Qconcave => aoi_corr::opt::ConstraintKind::QuadraticConcave,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveKind {
    /// Σ_j 1/p̃_j, which orders allocations like the sum of ages.
    Aoi,
    /// Σ_j ε_j.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    /// Closed form where one exists, grid search otherwise.
    Auto,
    ClosedForm,
    Grid,
}
