//! Command-line front end: configuration resolution (defaults, config
//! file, flags), experiment execution, and the CSV/snapshot artifact
//! writers. The binary lives in `main.rs`; everything here is callable
//! from tests.

pub mod args;
pub mod configfile;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use relaysim_core::config::{ConfigError, ExperimentConfig};
use relaysim_core::ddqn::write_checkpoint;
use relaysim_core::engine::{
    episode_seed, run_episode_with_agents, run_experiment, EngineError,
};
use relaysim_core::trace::EpisodeTrace;

use args::{BaselineArgs, Cli, Command, ConfigArgs, EpisodeArgs, ProfileArg, RunArgs, ValidateArgs};
use configfile::FileExtras;

/// Environment variable providing the default output directory.
pub const OUT_DIR_ENV: &str = "RELAYSIM_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("{path}:{line}: bad value for `{key}`: {detail}")]
    BadValue {
        path: String,
        line: usize,
        key: String,
        detail: String,
    },
    #[error("{path}:{line}: {detail}")]
    BadLine {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("snapshot step {step} out of range 1..={max}")]
    SnapshotStep { step: usize, max: usize },
    #[error("this trace recorded no snapshots")]
    NoSnapshots,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl CliError {
    /// Exit-code category: 2 configuration/usage, 3 I/O, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_)
            | CliError::UnknownKey { .. }
            | CliError::BadValue { .. }
            | CliError::BadLine { .. }
            | CliError::SnapshotStep { .. }
            | CliError::NoSnapshots => 2,
            CliError::Io { .. } => 3,
            CliError::Engine(EngineError::Config(_)) => 2,
            CliError::Engine(_) => 4,
        }
    }
}

/// Fully resolved run: validated config plus output settings.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub snapshot_steps: Vec<usize>,
}

fn profile_base(profile: Option<&str>) -> Result<ExperimentConfig, CliError> {
    match profile {
        None | Some("default") => Ok(ExperimentConfig::default()),
        Some("paper-literal") => Ok(ExperimentConfig::paper_literal()),
        Some(other) => Err(CliError::BadValue {
            path: "<profile>".into(),
            line: 0,
            key: "profile".into(),
            detail: format!("`{other}` is not `default` or `paper-literal`"),
        }),
    }
}

fn apply_flag_overrides(config: &mut ExperimentConfig, a: &ConfigArgs) {
    macro_rules! set {
        ($field:expr, $opt:expr) => {
            if let Some(v) = $opt {
                $field = v;
            }
        };
    }
    set!(config.region.width, a.region_width);
    set!(config.region.height, a.region_height);
    set!(config.density, a.density);
    set!(config.delta_max, a.delta_max);
    set!(config.num_sources, a.num_sources);
    set!(config.terminals_per_source, a.terminals_per_source);
    set!(config.source_x_frac, a.source_x_frac);
    set!(config.terminal_x_frac, a.terminal_x_frac);
    set!(config.horizon, a.horizon);
    set!(config.episodes, a.episodes);
    set!(config.gamma, a.gamma);
    set!(config.reward.offset, a.reward_offset);
    set!(config.reward.omega, a.omega);
    set!(config.reward.eta, a.eta);
    set!(config.reward.reward_divisor, a.reward_divisor);
    set!(config.epsilon.start, a.epsilon_start);
    set!(config.epsilon.end, a.epsilon_end);
    set!(config.epsilon.decay_steps, a.epsilon_decay_steps);
    set!(config.sync_interval, a.target_sync_interval);
    set!(config.learning_rate, a.learning_rate);
    set!(config.rmsprop_decay, a.rmsprop_decay);
    set!(config.rmsprop_epsilon, a.rmsprop_epsilon);
    set!(config.hidden_size, a.hidden_size);
    set!(config.state_divisor, a.state_divisor);
    set!(config.mobility, a.mobility.map(|m| m.to_kind()));
    set!(config.mobility_sigma_frac, a.mobility_sigma_frac);
    set!(config.step_order, a.step_order.map(|s| s.to_kind()));
    set!(config.policy, a.policy.map(|p| p.to_kind()));
    set!(config.link_throughput_mbps, a.link_throughput_mbps);
    set!(config.path_loss_eta, a.path_loss_eta);
    set!(config.path_loss_alpha, a.path_loss_alpha);
    set!(config.master_seed, a.seed);
    set!(config.threads, a.threads);
    set!(config.record_snapshots, a.record_snapshots);
}

/// Default snapshot export points: 20%, 40%, 80%, and 100% of the horizon.
fn default_snapshot_steps(horizon: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = [horizon / 5, 2 * horizon / 5, 4 * horizon / 5, horizon]
        .into_iter()
        .filter(|&s| s >= 1)
        .collect();
    steps.dedup();
    steps
}

/// Resolve flags over config-file keys over profile defaults, validate,
/// and settle the output directory (flag, file, then environment).
pub fn resolve(args: &ConfigArgs) -> Result<Resolved, CliError> {
    let mut extras = FileExtras::default();
    let file_entries = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Some((path.clone(), configfile::parse_lines(path, &text)?))
        }
        None => None,
    };

    // profile: flag beats file beats default
    let file_profile = file_entries.as_ref().and_then(|(_, entries)| {
        entries
            .iter()
            .find(|(k, _, _)| k == "profile")
            .map(|(_, v, _)| v.clone())
    });
    let flag_profile = args.profile.map(|p| match p {
        ProfileArg::Default => "default".to_string(),
        ProfileArg::PaperLiteral => "paper-literal".to_string(),
    });
    let mut config = profile_base(flag_profile.or(file_profile).as_deref())?;

    if let Some((path, entries)) = &file_entries {
        configfile::apply_entries(path, entries, &mut config, &mut extras)?;
    }
    apply_flag_overrides(&mut config, args);
    config.validate()?;

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| extras.out_dir.map(PathBuf::from))
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("relaysim-out"));
    let snapshot_steps = extras
        .snapshot_steps
        .unwrap_or_else(|| default_snapshot_steps(config.horizon));

    Ok(Resolved {
        config,
        out_dir,
        snapshot_steps,
    })
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn print_summary(resolved: &Resolved, traces: &[EpisodeTrace], report_line: &str) {
    let relays: Vec<usize> = traces.iter().map(|t| t.relay_count).collect();
    println!(
        "ran {} episode(s), relay counts {:?}",
        traces.len(),
        relays
    );
    println!("{report_line}");
    println!("artifacts in {}", resolved.out_dir.display());
}

/// `run` and `baseline`: full experiment, manifest + metrics.csv.
pub fn cmd_run(resolved: &Resolved) -> Result<(), CliError> {
    ensure_out_dir(&resolved.out_dir)?;
    let artifacts = vec!["manifest.txt".to_string(), "metrics.csv".to_string()];
    output::write_manifest(resolved, &artifacts, &resolved.out_dir.join("manifest.txt"))?;

    let result = run_experiment(&resolved.config)?;
    output::write_metrics_csv(&result.traces, &resolved.out_dir.join("metrics.csv"))?;

    let report = &result.report;
    print_summary(
        resolved,
        &result.traces,
        &format!(
            "window [{}, {}]: connectivity {}, goodput {} Mbps, power {} dBm",
            report.window.0,
            report.window.1,
            output::fmt_sig(report.window_connectivity, 6),
            output::fmt_sig(report.window_goodput_mbps, 6),
            output::fmt_sig(report.window_power_dbm, 6),
        ),
    );
    Ok(())
}

/// `episode`: one episode with heatmap, snapshots, and optional DDQN
/// checkpoint dumps.
pub fn cmd_episode(resolved: &Resolved, episode_index: usize, ddqn_dump: Option<&Path>) -> Result<(), CliError> {
    let mut config = resolved.config.clone();
    config.record_snapshots = true;
    for &step in &resolved.snapshot_steps {
        if step < 1 || step > config.horizon {
            return Err(CliError::SnapshotStep {
                step,
                max: config.horizon,
            });
        }
    }

    ensure_out_dir(&resolved.out_dir)?;
    let mut artifacts = vec![
        "manifest.txt".to_string(),
        "metrics.csv".to_string(),
        "heatmap.csv".to_string(),
    ];
    artifacts.extend(
        resolved
            .snapshot_steps
            .iter()
            .map(|s| format!("snapshot_step{s}.txt")),
    );
    output::write_manifest(resolved, &artifacts, &resolved.out_dir.join("manifest.txt"))?;

    let seed = episode_seed(config.master_seed, episode_index);
    let (mut trace, agents) = run_episode_with_agents(&config, seed)?;
    trace.episode_index = episode_index;

    output::write_metrics_csv(
        std::slice::from_ref(&trace),
        &resolved.out_dir.join("metrics.csv"),
    )?;
    output::write_radius_heatmap_csv(&trace, &resolved.out_dir.join("heatmap.csv"))?;
    for &step in &resolved.snapshot_steps {
        let path = resolved.out_dir.join(format!("snapshot_step{step}.txt"));
        output::write_snapshot(&trace, step, &path)?;
    }
    if let Some(dir) = ddqn_dump {
        ensure_out_dir(dir)?;
        for (ordinal, agent) in agents.iter().enumerate() {
            let path = dir.join(format!("ddqn_agent{ordinal}_node{}.txt", agent.node_id));
            let mut file = fs::File::create(&path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            write_checkpoint(&agent.ddqn, &mut file).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
    }

    let last = trace.steps.last().expect("horizon >= 2");
    print_summary(
        resolved,
        std::slice::from_ref(&trace),
        &format!(
            "episode {} (seed {}): final connectivity {}, final goodput {} Mbps",
            episode_index,
            seed,
            output::fmt_sig(last.metrics.connectivity_ratio, 6),
            output::fmt_sig(last.metrics.goodput_mbps, 6),
        ),
    );
    Ok(())
}

/// `validate-config`: resolve, validate, and print every key.
pub fn cmd_validate(resolved: &Resolved) -> Result<(), CliError> {
    for (key, value) in output::manifest_entries(resolved, &[]) {
        if key != "artifacts" {
            println!("{key} = {value}");
        }
    }
    println!("configuration ok");
    Ok(())
}

/// Dispatch a parsed command line.
pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(RunArgs { config }) => cmd_run(&resolve(&config)?),
        Command::Baseline(BaselineArgs { baseline, config }) => {
            let mut resolved = resolve(&config)?;
            resolved.config.policy = baseline.to_kind();
            cmd_run(&resolved)
        }
        Command::Episode(EpisodeArgs {
            config,
            episode_index,
            snapshot_steps,
            ddqn_dump,
        }) => {
            let mut resolved = resolve(&config)?;
            if let Some(steps) = snapshot_steps {
                resolved.snapshot_steps = steps;
            }
            cmd_episode(&resolved, episode_index, ddqn_dump.as_deref())
        }
        Command::ValidateConfig(ValidateArgs { config }) => cmd_validate(&resolve(&config)?),
    }
}
