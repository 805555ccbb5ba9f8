//! `amgenc`: charge-balanced generation, repair and analysis of periodic
//! amorphous structures.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 infeasible repair.

mod generate;
mod inspect;

use std::path::PathBuf;
use std::process::ExitCode;

use amgenc_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "amgenc", version, about = "Charge-balanced flow-matching generator for amorphous materials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate structures and write one extended-XYZ file per sample.
    Generate(GenerateArgs),
    /// Run the discrete charge repair on a structure carrying element logits.
    Project(ProjectArgs),
    /// Structure analysis: RDF, coordination, rings, concentration, charge.
    Analyze(AnalyzeArgs),
    /// MAE, RMSE and MAPE between two value files.
    Metrics(MetricsArgs),
    /// Run one generation and print its per-step charge trace.
    Trace(TraceArgs),
}

/// Velocity field, table and sampling settings shared by `generate` and `trace`.
#[derive(Args, Debug)]
pub struct FlowArgs {
    /// Charge table file (`symbol charge frequency [radius] [ghost]` per line).
    #[arg(long)]
    pub table: PathBuf,
    /// Trained network weights.
    #[arg(long, group = "field")]
    pub weights: Option<PathBuf>,
    /// Exact teacher field toward a fixed target; the optional extended-XYZ
    /// file supplies the target, otherwise one is drawn from the seed.
    #[arg(long, group = "field", num_args = 0..=1)]
    pub teacher: Option<Option<PathBuf>>,
    /// Randomly initialised network with this weight seed.
    #[arg(long, group = "field")]
    pub random_weights: Option<u64>,
    /// Message-passing layers for --random-weights.
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    /// Hidden width for --random-weights.
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    /// Coordinate channels for --random-weights.
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    /// Attention MLP width for --random-weights.
    #[arg(long, default_value_t = 128)]
    pub attention: usize,
    /// Aggregation normaliser of the network.
    #[arg(long, default_value_t = 40.0)]
    pub n_norm: f64,
    /// Run config file (`key = value`); flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Euler steps.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    /// Element noise width.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Softmax temperature of the charge relaxation.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Cubic cell edge in Å.
    #[arg(long)]
    pub edge: Option<f64>,
    /// Maximum atom density in atoms per Å³; sets the number of slots.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Neighbour cutoff in Å.
    #[arg(long)]
    pub r_cut: Option<f64>,
    /// Target property vector, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    /// Base seed; sample k uses a seed derived from it and k.
    #[arg(long, env = "AMGENC_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub n_samples: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Index of the sample whose seed is used.
    #[arg(long, default_value_t = 0)]
    pub sample: u64,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    /// Extended-XYZ file with a `logits` column.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// Output file for the repaired structure; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep ghost atoms in the repaired structure.
    #[arg(long)]
    pub include_ghosts: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// Partial RDF for a species pair, e.g. `Si-O`.
    #[arg(long)]
    pub rdf: Option<String>,
    /// Cumulative coordination number for a species pair.
    #[arg(long)]
    pub cn: Option<String>,
    /// Ring statistics, counting atoms of this species per ring.
    #[arg(long, num_args = 0..=1, default_missing_value = "Si")]
    pub rings: Option<String>,
    /// Largest ring size searched.
    #[arg(long, default_value_t = amgenc_core::analysis::DEFAULT_MAX_RING)]
    pub max_ring: usize,
    /// Bonding threshold as a multiple of the summed covalent radii.
    #[arg(long, default_value_t = amgenc_core::analysis::DEFAULT_BOND_FACTOR)]
    pub bond_factor: f64,
    /// Molar concentration of a species among non-ghost atoms.
    #[arg(long)]
    pub concentration: Option<String>,
    /// Total formal charge.
    #[arg(long)]
    pub charge: bool,
    /// Radial range in Å; defaults to min(6, half the smallest cell width).
    #[arg(long)]
    pub rmax: Option<f64>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Whitespace-separated target values.
    #[arg(long)]
    pub targets: PathBuf,
    /// Whitespace-separated generated values, in the same order.
    #[arg(long)]
    pub generated: PathBuf,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
    Infeasible { residual: i64, nearest: i64 },
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Infeasible { .. } => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleRepair { residual, nearest } => Failure::Infeasible { residual, nearest },
            Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate::run_generate(a),
        Command::Trace(a) => generate::run_trace(a),
        Command::Project(a) => inspect::run_project(a),
        Command::Analyze(a) => inspect::run_analyze(a),
        Command::Metrics(a) => inspect::run_metrics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Infeasible { residual, nearest } => {
                    eprintln!("error: no zero-charge assignment is reachable (residual charge {residual})");
                    eprintln!("nearest achievable charge: {nearest}");
                }
            }
            ExitCode::from(f.code())
        }
    }
}
