use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use restbuf_core::sim::{BlockedDenominator, SimMode};
use restbuf_testbed::InjectionSide;

use crate::sweep::Engine;

#[derive(Debug, Parser)]
#[command(
    name = "restbuf",
    version,
    about = "Client buffer occupancy and blocking under message loss"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary distribution, S and B from the chain.
    Theory(TheoryArgs),
    /// Monte-Carlo estimate of S, B and the occupancy.
    Simulate(SimulateArgs),
    /// Loopback client/server run with emulated loss.
    Testbed(TestbedArgs),
    /// Theory, simulation and testbed over a grid of p and k.
    Sweep(SweepArgs),
    /// Replays a scripted sequence of attempt outcomes.
    Trace(TraceArgs),
    /// Buffer multiplier with the least expected blocking.
    Recommend(RecommendArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Embedded,
    Timed,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Embedded => SimMode::Embedded,
            ModeArg::Timed => SimMode::Timed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    All,
    TimeoutOnly,
}

impl From<DenominatorArg> for BlockedDenominator {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::All => BlockedDenominator::All,
            DenominatorArg::TimeoutOnly => BlockedDenominator::TimeoutOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Server,
    Client,
}

impl From<SideArg> for InjectionSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Server => InjectionSide::Server,
            SideArg::Client => InjectionSide::Client,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Loss probability; with --loss-vector the vector decides instead.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Arrivals per timeout; derived from --timeout/--t when those are given.
    #[arg(long)]
    pub m: Option<u32>,
    /// Arrival interval in seconds (timed mode).
    #[arg(long)]
    pub t: Option<f64>,
    /// Timeout in seconds (timed mode).
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long, value_enum, default_value = "embedded")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1_000_000)]
    pub observations: u64,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u32,
    /// 0/1 file driving attempt outcomes (1 = lost), embedded mode.
    #[arg(long)]
    pub loss_vector: Option<PathBuf>,
    /// Reuse the loss vector from the start when it runs out.
    #[arg(long)]
    pub cyclic: bool,
    #[arg(long, value_enum, default_value = "all")]
    pub blocked_denominator: DenominatorArg,
    /// Per-observation records as NDJSON.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TestbedArgs {
    /// JSON experiment file; flags below are ignored when given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    /// Scaled arrival interval in seconds.
    #[arg(long, default_value_t = 0.3)]
    pub t: f64,
    /// Scaled timeout in seconds.
    #[arg(long, default_value_t = 1.5)]
    pub timeout: f64,
    #[arg(long, default_value_t = 5_000)]
    pub observations: u64,
    #[arg(long, default_value_t = 100)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Client/server pairs run side by side, sharing the observations.
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    #[arg(long)]
    pub loss_vector: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "server")]
    pub injection_side: SideArg,
    #[arg(long)]
    pub keep_alive: bool,
    #[arg(long, default_value_t = 199)]
    pub frame_size: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Loss probabilities, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "theory,sim")]
    pub engines: Vec<Engine>,
    #[arg(long, default_value_t = 4)]
    pub replications: u32,
    /// Simulated observations per replication.
    #[arg(long, default_value_t = 250_000)]
    pub observations: u64,
    #[arg(long, default_value_t = 1_000)]
    pub warmup: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    pub blocked_denominator: DenominatorArg,
    /// Testbed arrival interval in seconds.
    #[arg(long, default_value_t = 0.3)]
    pub t: f64,
    /// Testbed timeout in seconds.
    #[arg(long, default_value_t = 1.5)]
    pub timeout: f64,
    #[arg(long, default_value_t = 5_000)]
    pub testbed_observations: u64,
    /// Exit 2 when a simulated S is more than 3 sigma from theory.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// `canonical`, `all-ok`, or a file of ok/fail tokens.
    #[arg(long, default_value = "canonical")]
    pub script: String,
    /// Observations to replay.
    #[arg(long)]
    pub obs: Option<usize>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Expected state sequence, comma separated; exit 2 on mismatch.
    #[arg(long, value_delimiter = ',')]
    pub expect: Option<Vec<usize>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    /// Candidate multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k: Vec<u32>,
    #[command(flatten)]
    pub output: OutputArgs,
}
