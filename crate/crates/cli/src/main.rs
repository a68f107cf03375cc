//! `auction-attrib`: revenue attribution tables, callout-policy sweeps, and
//! participation-equilibrium reports.
//!
//! Exit codes: 0 on success (including "no participating equilibrium", which
//! is a finding), 1 on runtime failure, 2 on usage errors.

mod attribute;
mod equilibrium;
mod svg;
mod sweep;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Environment variable capping worker threads for parallel sweeps.
const THREADS_ENV: &str = "AUCTION_ATTRIB_THREADS";

#[derive(Parser)]
#[command(name = "auction-attrib", version, about = "Shapley revenue attribution and callout-policy evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print per-bidder revenue attributions for one bid vector.
    Attribute(AttributeArgs),
    /// Sweep callout mechanisms across a threshold grid and write CSVs.
    Sweep(SweepArgs),
    /// Evaluate the two-stage participation condition over sweep outputs.
    Equilibrium(EquilibriumArgs),
}

#[derive(Args)]
struct AttributeArgs {
    /// Comma-separated bids; bidder k is the k-th entry (1-based).
    bids: String,
    /// Auction mechanism: first-price or second-price.
    #[arg(long, default_value = "second-price")]
    mechanism: String,
    /// Reserve price; bids below it are treated as zero for attribution.
    #[arg(long = "r", default_value_t = 0.0)]
    reserve: f64,
    /// CSV of probability rows p_1..p_n (row k holds p_k) for asymmetric
    /// attribution.
    #[arg(long)]
    profile: Option<std::path::PathBuf>,
    /// Also run the exact enumeration oracle (n <= 12) and print the
    /// operator entries and the largest deviation.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated mechanism tokens (sha,bar,win,spd,rnk,bid,rvc,rqt,gra)
    /// or `all`.
    #[arg(long)]
    mechanisms: String,
    /// Bidders per synthetic dataset.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Auctions per synthetic dataset.
    #[arg(long = "T", default_value_t = 100)]
    auctions: usize,
    /// Upper bound of the per-bidder median draw.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Upper bound of the per-bidder log-space variance draw.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Reserve price. For `--input` data this is the original-units reserve:
    /// bids are rescaled into reserve units and simulated with reserve 1.
    #[arg(long = "r", default_value_t = 1.0)]
    reserve: f64,
    /// Number of datasets (synthetic draws, or resampling fills for
    /// `--input` data with missing cells).
    #[arg(long = "M", default_value_t = 10)]
    datasets: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Top-fraction targets in (0, 1], comma-separated; each point calls
    /// (at least) that fraction of bidders per auction.
    #[arg(long = "theta-grid", default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    theta_grid: String,
    /// Drop-probability grid for rqt; defaults to 1 - theta-grid targets.
    #[arg(long = "p-grid")]
    p_grid: Option<String>,
    /// Fixed greedy set size for gra; defaults to round(target * n) per
    /// grid point.
    #[arg(long = "K")]
    greedy_size: Option<usize>,
    /// Monte Carlo accuracy for gra (ceil(1/epsilon) samples per estimate).
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Auction mechanism simulated in every stream.
    #[arg(long, default_value = "second-price")]
    mechanism: String,
    /// Real auction CSV (schema auction_id,bidder_id,bid) instead of
    /// synthetic data.
    #[arg(long)]
    input: Option<std::path::PathBuf>,
    /// Output directory for per-mechanism CSVs, ranking, and metadata.
    #[arg(long)]
    out: std::path::PathBuf,
    /// Restrict score learning to called bidders' bids (live-exchange
    /// visibility) instead of the complete matrix.
    #[arg(long = "called-only")]
    called_only: bool,
    /// Also emit a self-contained SVG of the revenue and welfare curves.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct EquilibriumArgs {
    /// Directory holding sweep CSVs (one per mechanism).
    #[arg(long)]
    input: std::path::PathBuf,
    /// Discount factor in [0, 1].
    #[arg(long)]
    delta: f64,
    /// Compare mechanisms at the grid point nearest this called fraction.
    #[arg(long, default_value_t = 0.5)]
    pct: f64,
    /// Mechanism whose welfare at the operating point serves as the outside
    /// option.
    #[arg(long, default_value = "rqt")]
    baseline: String,
    /// Explicit outside-option utility, overriding --baseline.
    #[arg(long = "u")]
    outside: Option<f64>,
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

/// Usage-level failures exit 2 (as clap parse errors do); everything else
/// exits 1.
pub(crate) enum CmdError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CmdError {
    fn from(e: E) -> Self {
        CmdError::Runtime(e.into())
    }
}

pub(crate) type CmdResult = Result<(), CmdError>;

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attribute(args) => attribute::run(&args),
        Command::Sweep(args) => sweep::run(&args),
        Command::Equilibrium(args) => equilibrium::run(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
