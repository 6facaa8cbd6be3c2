use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::protocol::PeerLimit;

use super::config::{ConfigError, ScenarioConfig};
use super::runner::{run_scenario, RunMetrics, RunOptions};

/// A scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Cycles,
    Peers,
    TransferSlot,
    Method,
    Delay,
}

impl FromStr for Axis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "cycles" => Axis::Cycles,
            "peers" => Axis::Peers,
            "transfer_slot" => Axis::TransferSlot,
            "method" => Axis::Method,
            "delay" => Axis::Delay,
            _ => {
                return Err(ConfigError(format!(
                    "axis: unknown axis `{s}` (expected cycles, peers, transfer_slot, method or delay)"
                )))
            }
        })
    }
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Cycles => "cycles",
            Axis::Peers => "peers",
            Axis::TransferSlot => "transfer_slot",
            Axis::Method => "method",
            Axis::Delay => "delay",
        }
    }

    /// Sets the parameter on `cfg`. A delay longer than the retention can
    /// hold grows the retention to fit.
    pub fn apply(self, cfg: &mut ScenarioConfig, value: &str) -> Result<(), ConfigError> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| ConfigError(format!("{}: `{v}` is not a number", self.as_str())));
        match self {
            Axis::Cycles => {
                cfg.gossip_cycles = value.parse().map_err(|_| ConfigError(format!("cycles: `{value}` is not a count")))?;
            }
            Axis::Peers => {
                cfg.protocol.max_peers = match value {
                    "unlimited" => PeerLimit::Unconstrained,
                    v => PeerLimit::Limited(v.parse().map_err(|_| ConfigError(format!("peers: `{v}` is not a count")))?),
                };
            }
            Axis::TransferSlot => cfg.protocol.transfer_slot_s = num(value)?,
            Axis::Method => cfg.method = value.parse()?,
            Axis::Delay => {
                cfg.harvest_delay_s = num(value)?;
                cfg.retention_s = cfg.retention_s.max(cfg.harvest_delay_s + cfg.workload.response_timeout_s);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: String,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// One run per `(value, seed)`, rows ordered value-major. Runs execute on up
/// to `jobs` threads; the output does not depend on `jobs`.
pub fn sweep(
    base: &ScenarioConfig,
    axis: Axis,
    values: &[String],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<SweepRow>, ConfigError> {
    let mut cfgs = Vec::new();
    for v in values {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.seed = seed;
            axis.apply(&mut cfg, v)?;
            cfg.validate()?;
            cfgs.push((v.clone(), cfg));
        }
    }
    run_all(&cfgs, jobs)
}

/// Runs arbitrary labelled configurations, preserving their order.
pub fn run_all(cfgs: &[(String, ScenarioConfig)], jobs: usize) -> Result<Vec<SweepRow>, ConfigError> {
    let slots: Mutex<Vec<Option<Result<RunMetrics, ConfigError>>>> = Mutex::new(vec![None; cfgs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(cfgs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, cfg)) = cfgs.get(i) else { break };
                let r = run_scenario(cfg, &RunOptions::default()).map(|o| o.metrics);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    let slots = slots.into_inner().expect("threads joined");
    cfgs.iter()
        .zip(slots)
        .map(|((v, cfg), r)| {
            let metrics = r.expect("every run executed")?;
            Ok(SweepRow { axis_value: v.clone(), seed: cfg.seed, metrics })
        })
        .collect()
}

/// Mean and standard error over seeds for one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub axis_value: String,
    pub runs: usize,
    pub tp: Option<(f64, f64)>,
    pub fp: Option<(f64, f64)>,
    pub overhead: Option<(f64, f64)>,
    pub pair_overhead: Option<(f64, f64)>,
}

/// Mean and standard error of the mean; the error is 0 for a single sample.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((m, 0.0));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Some((m, (var / n).sqrt()))
}

/// Groups rows by axis value, in order of first appearance.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut order: Vec<&str> = Vec::new();
    for r in rows {
        if !order.contains(&r.axis_value.as_str()) {
            order.push(&r.axis_value);
        }
    }
    order
        .into_iter()
        .map(|v| {
            let group: Vec<&RunMetrics> = rows.iter().filter(|r| r.axis_value == v).map(|r| &r.metrics).collect();
            let col = |f: fn(&RunMetrics) -> Option<f64>| mean_stderr(&group.iter().filter_map(|m| f(m)).collect::<Vec<_>>());
            Aggregate {
                axis_value: v.to_string(),
                runs: group.len(),
                tp: col(|m| m.tp_ratio),
                fp: col(|m| m.fp_ratio),
                overhead: col(|m| m.overhead_kbps),
                pair_overhead: col(|m| m.pair_overhead_kbps),
            }
        })
        .collect()
}

pub const ROWS_HEADER: &str = "axis_value,seed,tp_ratio,fp_ratio,overhead_kbps,conversations";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn pair(x: Option<(f64, f64)>) -> String {
    match x {
        Some((m, e)) => format!("{m:.6},{e:.6}"),
        None => ",".into(),
    }
}

pub fn rows_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{ROWS_HEADER}\n");
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.axis_value,
            r.seed,
            opt(m.tp_ratio),
            opt(m.fp_ratio),
            opt(m.overhead_kbps),
            m.conversations
        );
    }
    out
}

pub fn aggregate_csv(aggs: &[Aggregate]) -> String {
    let mut out = String::from(
        "axis_value,runs,tp_mean,tp_stderr,fp_mean,fp_stderr,overhead_mean,overhead_stderr,pair_overhead_mean,pair_overhead_stderr\n",
    );
    for a in aggs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            a.axis_value,
            a.runs,
            pair(a.tp),
            pair(a.fp),
            pair(a.overhead),
            pair(a.pair_overhead)
        );
    }
    out
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn emit(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}
