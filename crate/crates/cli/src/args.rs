//! Command-line surface: subcommands plus one flag per configuration key.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relaysim_core::config::{MobilityKind, PolicyKind, StepOrder};

#[derive(Parser, Debug)]
#[command(
    name = "relaysim",
    version,
    about = "Multi-hop ad hoc network formation with per-relay DDQN agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the configured number of episodes and write metrics.csv
    Run(RunArgs),
    /// Run one episode and write metrics.csv, heatmap.csv, and snapshots
    Episode(EpisodeArgs),
    /// Run a non-learned baseline policy over the full experiment
    Baseline(BaselineArgs),
    /// Resolve the configuration, validate it, and print it
    ValidateConfig(ValidateArgs),
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Default)]
pub struct EpisodeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Which derived episode seed to use (matches `run`'s episode indices)
    #[arg(long, default_value_t = 0)]
    pub episode_index: usize,
    /// Steps to export snapshots for (default: 20%, 40%, 80%, 100% of the
    /// horizon)
    #[arg(long, value_delimiter = ',')]
    pub snapshot_steps: Option<Vec<usize>>,
    /// Directory to dump one DDQN parameter checkpoint per relay into
    #[arg(long)]
    pub ddqn_dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    /// Baseline policy to run
    #[arg(value_enum)]
    pub baseline: BaselinePolicy,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Default)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselinePolicy {
    Random,
    AlwaysMax,
}

impl BaselinePolicy {
    pub fn to_kind(self) -> PolicyKind {
        match self {
            BaselinePolicy::Random => PolicyKind::Random,
            BaselinePolicy::AlwaysMax => PolicyKind::AlwaysMax,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileArg {
    /// 55 x 55 region, expected 80 relays, max radius 15
    Default,
    /// 100 x 100 region, density 8e-3, max radius 3.0
    PaperLiteral,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MobilityArg {
    RandomWalk,
    UniformRedraw,
}

impl MobilityArg {
    pub fn to_kind(self) -> MobilityKind {
        match self {
            MobilityArg::RandomWalk => MobilityKind::RandomWalk,
            MobilityArg::UniformRedraw => MobilityKind::UniformRedraw,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOrderArg {
    ActThenMove,
    MoveThenAct,
}

impl StepOrderArg {
    pub fn to_kind(self) -> StepOrder {
        match self {
            StepOrderArg::ActThenMove => StepOrder::ActThenMove,
            StepOrderArg::MoveThenAct => StepOrder::MoveThenAct,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyArg {
    Learned,
    Random,
    AlwaysMax,
}

impl PolicyArg {
    pub fn to_kind(self) -> PolicyKind {
        match self {
            PolicyArg::Learned => PolicyKind::Learned,
            PolicyArg::Random => PolicyKind::Random,
            PolicyArg::AlwaysMax => PolicyKind::AlwaysMax,
        }
    }
}

/// One optional flag per configuration key. Flags override config-file
/// keys, which override the profile defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    /// Config file with flat `key = value` lines (a manifest works too)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base parameter profile
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    #[arg(long)]
    pub region_width: Option<f64>,
    #[arg(long)]
    pub region_height: Option<f64>,
    /// Relay density in nodes per square unit
    #[arg(long)]
    pub density: Option<f64>,
    /// Largest transmission radius
    #[arg(long)]
    pub delta_max: Option<f64>,
    #[arg(long)]
    pub num_sources: Option<usize>,
    #[arg(long)]
    pub terminals_per_source: Option<usize>,
    #[arg(long)]
    pub source_x_frac: Option<f64>,
    #[arg(long)]
    pub terminal_x_frac: Option<f64>,
    /// Steps per episode
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Episodes per experiment
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Discount factor
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Reward offset term
    #[arg(long)]
    pub reward_offset: Option<f64>,
    /// Reward weight between throughput change and action cost
    #[arg(long)]
    pub omega: Option<f64>,
    /// Reward scale on the throughput change
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub reward_divisor: Option<f64>,
    #[arg(long)]
    pub epsilon_start: Option<f64>,
    #[arg(long)]
    pub epsilon_end: Option<f64>,
    #[arg(long)]
    pub epsilon_decay_steps: Option<u32>,
    /// Online-to-target copy interval in training steps
    #[arg(long)]
    pub target_sync_interval: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub rmsprop_decay: Option<f64>,
    #[arg(long)]
    pub rmsprop_epsilon: Option<f64>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub state_divisor: Option<f64>,
    #[arg(long, value_enum)]
    pub mobility: Option<MobilityArg>,
    /// Random-walk sigma as a fraction of region width
    #[arg(long)]
    pub mobility_sigma_frac: Option<f64>,
    #[arg(long, value_enum)]
    pub step_order: Option<StepOrderArg>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long)]
    pub link_throughput_mbps: Option<f64>,
    #[arg(long)]
    pub path_loss_eta: Option<f64>,
    #[arg(long)]
    pub path_loss_alpha: Option<f64>,
    /// Master seed for all derived random streams
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (results are identical for any value)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Keep per-step topology snapshots in memory during `run`
    #[arg(long)]
    pub record_snapshots: Option<bool>,
    /// Output directory (also settable via RELAYSIM_OUT_DIR)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
