//! Flat `key = value` configuration files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. The
//! same format is written back out as the run manifest, so a manifest can
//! be fed straight back in through `--config`.

use std::path::Path;

use relaysim_core::config::{ExperimentConfig, MobilityKind, PolicyKind, StepOrder};

use crate::CliError;

/// Keys that configure the run but live outside `ExperimentConfig`.
#[derive(Debug, Default, Clone)]
pub struct FileExtras {
    pub profile: Option<String>,
    pub out_dir: Option<String>,
    pub snapshot_steps: Option<Vec<usize>>,
}

pub fn parse_lines(path: &Path, text: &str) -> Result<Vec<(String, String, usize)>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::BadLine {
            path: path.display().to_string(),
            line: line_no,
            detail: "expected `key = value`".into(),
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string(), line_no));
    }
    Ok(entries)
}

fn bad_value(path: &Path, line: usize, key: &str, detail: String) -> CliError {
    CliError::BadValue {
        path: path.display().to_string(),
        line,
        key: key.to_string(),
        detail,
    }
}

fn parse_num<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    key: &str,
    value: &str,
) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| bad_value(path, line, key, format!("cannot parse `{value}`")))
}

/// Apply file entries onto a config. Unknown keys are a hard error; the
/// informational keys a manifest carries (`tool_version`, `artifacts`) are
/// accepted and ignored so manifests replay cleanly.
pub fn apply_entries(
    path: &Path,
    entries: &[(String, String, usize)],
    config: &mut ExperimentConfig,
    extras: &mut FileExtras,
) -> Result<(), CliError> {
    for (key, value, line) in entries {
        let line = *line;
        match key.as_str() {
            "profile" => extras.profile = Some(value.clone()),
            "region_width" => config.region.width = parse_num(path, line, key, value)?,
            "region_height" => config.region.height = parse_num(path, line, key, value)?,
            "density" => config.density = parse_num(path, line, key, value)?,
            "delta_max" => config.delta_max = parse_num(path, line, key, value)?,
            "num_sources" => config.num_sources = parse_num(path, line, key, value)?,
            "terminals_per_source" => {
                config.terminals_per_source = parse_num(path, line, key, value)?
            }
            "source_x_frac" => config.source_x_frac = parse_num(path, line, key, value)?,
            "terminal_x_frac" => config.terminal_x_frac = parse_num(path, line, key, value)?,
            "horizon" => config.horizon = parse_num(path, line, key, value)?,
            "episodes" => config.episodes = parse_num(path, line, key, value)?,
            "gamma" => config.gamma = parse_num(path, line, key, value)?,
            "reward_offset" => config.reward.offset = parse_num(path, line, key, value)?,
            "omega" => config.reward.omega = parse_num(path, line, key, value)?,
            "eta" => config.reward.eta = parse_num(path, line, key, value)?,
            "reward_divisor" => config.reward.reward_divisor = parse_num(path, line, key, value)?,
            "epsilon_start" => config.epsilon.start = parse_num(path, line, key, value)?,
            "epsilon_end" => config.epsilon.end = parse_num(path, line, key, value)?,
            "epsilon_decay_steps" => config.epsilon.decay_steps = parse_num(path, line, key, value)?,
            "target_sync_interval" => config.sync_interval = parse_num(path, line, key, value)?,
            "learning_rate" => config.learning_rate = parse_num(path, line, key, value)?,
            "rmsprop_decay" => config.rmsprop_decay = parse_num(path, line, key, value)?,
            "rmsprop_epsilon" => config.rmsprop_epsilon = parse_num(path, line, key, value)?,
            "hidden_size" => config.hidden_size = parse_num(path, line, key, value)?,
            "state_divisor" => config.state_divisor = parse_num(path, line, key, value)?,
            "mobility" => {
                config.mobility = match value.as_str() {
                    "random-walk" => MobilityKind::RandomWalk,
                    "uniform-redraw" => MobilityKind::UniformRedraw,
                    other => {
                        return Err(bad_value(
                            path,
                            line,
                            key,
                            format!("`{other}` is not `random-walk` or `uniform-redraw`"),
                        ))
                    }
                }
            }
            "mobility_sigma_frac" => config.mobility_sigma_frac = parse_num(path, line, key, value)?,
            "step_order" => {
                config.step_order = match value.as_str() {
                    "act-then-move" => StepOrder::ActThenMove,
                    "move-then-act" => StepOrder::MoveThenAct,
                    other => {
                        return Err(bad_value(
                            path,
                            line,
                            key,
                            format!("`{other}` is not `act-then-move` or `move-then-act`"),
                        ))
                    }
                }
            }
            "policy" => {
                config.policy = match value.as_str() {
                    "learned" => PolicyKind::Learned,
                    "random" => PolicyKind::Random,
                    "always-max" => PolicyKind::AlwaysMax,
                    other => {
                        return Err(bad_value(
                            path,
                            line,
                            key,
                            format!("`{other}` is not `learned`, `random`, or `always-max`"),
                        ))
                    }
                }
            }
            "link_throughput_mbps" => {
                config.link_throughput_mbps = parse_num(path, line, key, value)?
            }
            "path_loss_eta" => config.path_loss_eta = parse_num(path, line, key, value)?,
            "path_loss_alpha" => config.path_loss_alpha = parse_num(path, line, key, value)?,
            "seed" => config.master_seed = parse_num(path, line, key, value)?,
            "threads" => config.threads = parse_num(path, line, key, value)?,
            "record_snapshots" => {
                config.record_snapshots = match value.as_str() {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(bad_value(
                            path,
                            line,
                            key,
                            format!("`{other}` is not `true` or `false`"),
                        ))
                    }
                }
            }
            "out_dir" => extras.out_dir = Some(value.clone()),
            "snapshot_steps" => {
                let steps = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        bad_value(path, line, key, format!("cannot parse `{value}` as step list"))
                    })?;
                extras.snapshot_steps = Some(steps);
            }
            // manifest bookkeeping, accepted so manifests replay
            "tool_version" | "artifacts" => {}
            other => {
                return Err(CliError::UnknownKey {
                    path: path.display().to_string(),
                    line,
                    key: other.to_string(),
                })
            }
        }
    }
    Ok(())
}
