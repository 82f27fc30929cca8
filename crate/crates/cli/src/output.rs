//! Artifact writers: metrics CSV, radius heatmap CSV, topology snapshots,
//! and the run manifest. All numeric cells use 6 significant digits, lines
//! end with LF, and the negative-infinity power sentinel is the literal
//! token `-inf`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use relaysim_core::config::{ExperimentConfig, MobilityKind, PolicyKind, StepOrder};
use relaysim_core::metrics::shortest_path;
use relaysim_core::net::NodeKind;
use relaysim_core::trace::EpisodeTrace;

use crate::{CliError, Resolved};

/// Render with `sig` significant digits. Infinities become `inf`/`-inf`.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn io_ctx(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One row per (episode, step):
/// `episode,step,goodput_mbps,phi,connectivity_ratio,mean_power_dbm`.
pub fn write_metrics_csv(traces: &[EpisodeTrace], path: &Path) -> Result<(), CliError> {
    let ctx = io_ctx(path);
    let mut w = create(path)?;
    w.write_all(b"episode,step,goodput_mbps,phi,connectivity_ratio,mean_power_dbm\n")
        .map_err(&ctx)?;
    for trace in traces {
        for record in &trace.steps {
            let m = &record.metrics;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                trace.episode_index,
                record.step,
                fmt_sig(m.goodput_mbps, 6),
                fmt_sig(m.phi, 6),
                fmt_sig(m.connectivity_ratio, 6),
                fmt_sig(m.mean_power_dbm, 6),
            )
            .map_err(&ctx)?;
        }
    }
    w.flush().map_err(&ctx)
}

/// Matrix CSV: one row per relay, one column per step, cell = the relay's
/// radius entering that step. The first column is all zeros because every
/// episode starts with silent relays.
pub fn write_radius_heatmap_csv(trace: &EpisodeTrace, path: &Path) -> Result<(), CliError> {
    let ctx = io_ctx(path);
    let mut w = create(path)?;
    let horizon = trace.steps.len();
    for relay in 0..trace.relay_count {
        for step in 1..=horizon {
            if step > 1 {
                w.write_all(b",").map_err(&ctx)?;
            }
            let radius = if step == 1 {
                0.0
            } else {
                trace.steps[step - 2].radii[relay]
            };
            w.write_all(fmt_sig(radius, 6).as_bytes()).map_err(&ctx)?;
        }
        w.write_all(b"\n").map_err(&ctx)?;
    }
    w.flush().map_err(&ctx)
}

fn kind_name(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Source => "source",
        NodeKind::Relay => "relay",
        NodeKind::Terminal => "terminal",
    }
}

/// Plain-text snapshot of one recorded step:
///
/// ```text
/// step,30
/// node,<id>,<kind>,<x>,<y>,<radius>
/// edge,<src>,<dst>
/// path,<source>,<terminal>,<from>,<to>
/// ```
///
/// `path` lines list the edges of one shortest route per reachable flow;
/// unreachable flows contribute none.
pub fn write_snapshot(trace: &EpisodeTrace, step: usize, path: &Path) -> Result<(), CliError> {
    let records = trace.snapshots.as_ref().ok_or(CliError::NoSnapshots)?;
    let record = records
        .iter()
        .find(|r| r.step == step)
        .ok_or(CliError::SnapshotStep {
            step,
            max: trace.steps.len(),
        })?;
    let ctx = io_ctx(path);
    let mut w = create(path)?;
    writeln!(w, "step,{step}").map_err(&ctx)?;
    for node in &record.nodes {
        writeln!(
            w,
            "node,{},{},{},{},{}",
            node.id,
            kind_name(node.kind),
            fmt_sig(node.x, 6),
            fmt_sig(node.y, 6),
            fmt_sig(node.radius, 6),
        )
        .map_err(&ctx)?;
    }
    for &(src, dst) in &record.topology.edges {
        writeln!(w, "edge,{src},{dst}").map_err(&ctx)?;
    }
    for &(source, terminal) in &trace.flows {
        if let Some(route) = shortest_path(&record.topology, source, terminal) {
            for pair in route.windows(2) {
                writeln!(w, "path,{source},{terminal},{},{}", pair[0], pair[1]).map_err(&ctx)?;
            }
        }
    }
    w.flush().map_err(&ctx)
}

fn mobility_name(kind: MobilityKind) -> &'static str {
    match kind {
        MobilityKind::RandomWalk => "random-walk",
        MobilityKind::UniformRedraw => "uniform-redraw",
    }
}

fn step_order_name(order: StepOrder) -> &'static str {
    match order {
        StepOrder::ActThenMove => "act-then-move",
        StepOrder::MoveThenAct => "move-then-act",
    }
}

fn policy_name(policy: PolicyKind) -> &'static str {
    match policy {
        PolicyKind::Learned => "learned",
        PolicyKind::Random => "random",
        PolicyKind::AlwaysMax => "always-max",
    }
}

/// Every resolved configuration key as manifest `key = value` lines.
/// Feeding the manifest back through `--config` reproduces the run.
pub fn manifest_entries(resolved: &Resolved, artifacts: &[String]) -> Vec<(String, String)> {
    let c: &ExperimentConfig = &resolved.config;
    let mut kv: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| kv.push((k.to_string(), v));
    push("tool_version", env!("CARGO_PKG_VERSION").to_string());
    push("region_width", c.region.width.to_string());
    push("region_height", c.region.height.to_string());
    push("density", c.density.to_string());
    push("delta_max", c.delta_max.to_string());
    push("num_sources", c.num_sources.to_string());
    push("terminals_per_source", c.terminals_per_source.to_string());
    push("source_x_frac", c.source_x_frac.to_string());
    push("terminal_x_frac", c.terminal_x_frac.to_string());
    push("horizon", c.horizon.to_string());
    push("episodes", c.episodes.to_string());
    push("gamma", c.gamma.to_string());
    push("reward_offset", c.reward.offset.to_string());
    push("omega", c.reward.omega.to_string());
    push("eta", c.reward.eta.to_string());
    push("reward_divisor", c.reward.reward_divisor.to_string());
    push("epsilon_start", c.epsilon.start.to_string());
    push("epsilon_end", c.epsilon.end.to_string());
    push("epsilon_decay_steps", c.epsilon.decay_steps.to_string());
    push("target_sync_interval", c.sync_interval.to_string());
    push("learning_rate", c.learning_rate.to_string());
    push("rmsprop_decay", c.rmsprop_decay.to_string());
    push("rmsprop_epsilon", c.rmsprop_epsilon.to_string());
    push("hidden_size", c.hidden_size.to_string());
    push("state_divisor", c.state_divisor.to_string());
    push("mobility", mobility_name(c.mobility).to_string());
    push("mobility_sigma_frac", c.mobility_sigma_frac.to_string());
    push("step_order", step_order_name(c.step_order).to_string());
    push("policy", policy_name(c.policy).to_string());
    push("link_throughput_mbps", c.link_throughput_mbps.to_string());
    push("path_loss_eta", c.path_loss_eta.to_string());
    push("path_loss_alpha", c.path_loss_alpha.to_string());
    push("seed", c.master_seed.to_string());
    push("threads", c.threads.to_string());
    push("record_snapshots", c.record_snapshots.to_string());
    push("out_dir", resolved.out_dir.display().to_string());
    push(
        "snapshot_steps",
        resolved
            .snapshot_steps
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    push("artifacts", artifacts.join(","));
    kv
}

/// Write the manifest; this happens before the run starts.
pub fn write_manifest(
    resolved: &Resolved,
    artifacts: &[String],
    path: &Path,
) -> Result<(), CliError> {
    let ctx = io_ctx(path);
    let mut w = create(path)?;
    for (key, value) in manifest_entries(resolved, artifacts) {
        writeln!(w, "{key} = {value}").map_err(&ctx)?;
    }
    w.flush().map_err(&ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(455.0, 6), "455.000");
        assert_eq!(fmt_sig(0.59, 6), "0.590000");
        assert_eq!(fmt_sig(1820.0, 6), "1820.00");
        assert_eq!(fmt_sig(9.542425094393249, 6), "9.54243");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(-0.123456789, 6), "-0.123457");
    }

    #[test]
    fn sentinel_tokens() {
        assert_eq!(fmt_sig(f64::NEG_INFINITY, 6), "-inf");
        assert_eq!(fmt_sig(f64::INFINITY, 6), "inf");
        assert_eq!("-inf".parse::<f64>().unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn rendered_values_parse_back_within_precision() {
        for &x in &[291.2, 0.00123456, -4.55, 123456.789, 1e-9, 7.0] {
            let parsed: f64 = fmt_sig(x, 6).parse().unwrap();
            assert!(
                ((parsed - x) / x).abs() < 1e-5,
                "{x} -> {} -> {parsed}",
                fmt_sig(x, 6)
            );
        }
    }
}
