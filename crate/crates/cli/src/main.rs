mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Controller synthesis and reachable-set approximation for discrete-time
/// polynomial systems.
///
/// Solver settings can be overridden with OCCUSYNTH_FEAS_TOL,
/// OCCUSYNTH_GAP_TOL and OCCUSYNTH_MAX_ITER.
#[derive(Parser, Debug)]
#[command(name = "occusynth", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the synthesis relaxation and extract a polynomial controller.
    Synth(SynthArgs),
    /// Outer-approximate the backward reachable set (closed loop if a
    /// controller is given).
    Reach(ReachArgs),
    /// Simulate every vertex of a grid (or a list of points).
    Verify(VerifyArgs),
    /// Simulate one initial state and write its trajectory.
    Rollout(RolloutArgs),
    /// Evaluate certificate membership over a grid.
    Levelset(LevelsetArgs),
    /// Build the infinite-horizon LQR baseline at the system's fixed point.
    Lqr(LqrArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub order: usize,
    #[arg(long = "controller-degree")]
    pub controller_degree: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "svd-tol", default_value_t = 1e-8)]
    pub svd_tol: f64,
    /// Optional bound on the occupation-measure mass.
    #[arg(long = "mass-cap")]
    pub mass_cap: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ReachArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Relaxation order; may be omitted when --hierarchy gives the range.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Solve every order in `r0..r` (inclusive) and keep the history.
    #[arg(long)]
    pub hierarchy: Option<String>,
    #[arg(long = "mass-cap")]
    pub mass_cap: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Required when the system has inputs.
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Grid such as `20x20`, `21x21x=0` or `5[-1:1]x5[-1:1]`.
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    pub grid: Option<String>,
    /// Explicit initial states: `x1,x2;x1,x2;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    #[arg(long, default_value_t = occusynth::sim::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RolloutArgs {
    #[arg(long)]
    pub system: PathBuf,
    #[arg(long)]
    pub controller: Option<PathBuf>,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: String,
    #[arg(long, default_value_t = occusynth::sim::DEFAULT_STEPS)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LevelsetArgs {
    #[arg(long)]
    pub cert: PathBuf,
    #[arg(long)]
    pub grid: String,
    /// Test every history entry, not only the last `w`.
    #[arg(long)]
    pub intersection: bool,
    /// Supplies grid ranges from the bounding box of X.
    #[arg(long)]
    pub system: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LqrArgs {
    #[arg(long)]
    pub system: PathBuf,
    /// Diagonal of Q (default: identity).
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Diagonal of R in original input units (default: identity).
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(failure.code)
        }
    }
}
