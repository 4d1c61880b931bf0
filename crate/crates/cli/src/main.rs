//! `causal-bounds` command line.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 criterion or
//! precondition violation.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use causal_bounds::effects::{Criterion, FrontdoorForm, Regime};
use causal_bounds::PolicySpec;

#[derive(Debug)]
pub enum CliError {
    /// Bad input data, files or flags.
    Input(String),
    /// The structural criterion or a statistical precondition does not hold.
    Violation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Violation(_) => 3,
        }
    }
}

pub fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Parser)]
#[command(name = "causal-bounds", version, about = "Finite-sample causal effect intervals from observation streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an observation stream from a model and write it as JSON lines.
    Simulate(SimulateArgs),
    /// Compute the interval (or confidence sequence) for a causal effect.
    Analyze(AnalyzeArgs),
    /// Prediction set for the next outcome under intervention.
    Predict(PredictArgs),
    /// Check the back-door or front-door criterion on a graph.
    Check(CheckArgs),
    /// Monte Carlo coverage of one construction against a model's true effect.
    Coverage(CoverageArgs),
}

/// Where the variables and their roles come from.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Model file (JSON) with variables, edges, tables and optional roles.
    #[arg(long, conflicts_with = "graph")]
    pub model: Option<PathBuf>,
    /// Graph file in the text format (`Name: a b c` and `A -> B` lines).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Treatment variable; overrides the model's roles.
    #[arg(long)]
    pub treatment: Option<String>,
    /// Outcome variable; overrides the model's roles.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Adjustment (back-door) or mediator (front-door) variables, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub adjust: Option<Vec<String>>,
}

#[derive(Args, Debug, Clone)]
pub struct QueryArgs {
    /// JSON file with query fields; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub criterion: Option<Criterion>,
    /// Intervention value x̃ (a treatment label).
    #[arg(long = "treatment-value")]
    pub treatment_value: Option<String>,
    /// Outcome value y (an outcome label).
    #[arg(long = "outcome-value")]
    pub outcome_value: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub regime: Option<Regime>,
    /// Use the tighter binary constants (binary treatment, outcome and single binary adjustment).
    #[arg(long)]
    pub toy: bool,
    /// Front-door polynomial form (IID only).
    #[arg(long)]
    pub form: Option<FrontdoorForm>,
    /// Skip the structural criterion check.
    #[arg(long)]
    pub assume_criterion: bool,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Observation file; `-` or absent reads standard input.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Read CSV instead of JSON lines.
    #[arg(long)]
    pub csv: bool,
    /// CSV column map, `x=<col>,y=<col>,z=<col>[+<col>...]`.
    #[arg(long, requires = "csv")]
    pub columns: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of observations.
    #[arg(long)]
    pub n: u64,
    #[arg(long, env = "CAUSAL_BOUNDS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Treatment policy (strong interpretation); absent means IID sampling.
    #[arg(long)]
    pub policy: Option<PolicySpec>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Anytime regime: emit a record only when some estimate can change.
    #[arg(long)]
    pub checkpoints_only: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long = "treatment-value")]
    pub treatment_value: String,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long)]
    pub assume_criterion: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = Criterion::Backdoor)]
    pub criterion: Criterion,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    /// Model file; required since the true effect comes from its tables.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub treatment: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub adjust: Option<Vec<String>>,
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1000)]
    pub replications: u64,
    #[arg(long, env = "CAUSAL_BOUNDS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Treatment policy for the adaptive regimes (default adversarial-alternating).
    #[arg(long)]
    pub policy: Option<PolicySpec>,
    /// Print a text table instead of JSON.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Check(a) => commands::check(&a),
        Command::Coverage(a) => commands::coverage(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(m) => eprintln!("error: {m}"),
                CliError::Violation(m) => eprintln!("{m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
