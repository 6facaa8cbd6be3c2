use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tsharvest::harness::{
    aggregate, aggregate_csv, emit, reachability_curve, rows_csv, run_scenario, sweep, Axis, RunMetrics, RunOptions,
    ScenarioConfig, ScenarioKind, SweepRow,
};
use tsharvest::time::SimTime;

#[derive(Parser)]
#[command(name = "tsharvest", about = "Time-series harvesting experiments on a simulated MANET")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its metrics and traces.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Seeds to run; the first one also gets traces.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Write the message trace.
        #[arg(long)]
        trace: bool,
        /// Write node positions at every tick.
        #[arg(long)]
        positions: bool,
    },
    /// Vary one parameter over values and seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// cycles, peers, transfer_slot, method or delay.
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Fraction of a conversation's service hosts still reachable from its
    /// client as time passes after the conversation.
    Reachability {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64])]
        seeds: Vec<u64>,
        /// Horizon in minutes.
        #[arg(long, default_value_t = 16)]
        horizon_min: u64,
    },
    /// Print a preset as a config file.
    Preset {
        #[arg(default_value = "military")]
        scenario: ScenarioKind,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Config file; unset keys come from the preset it names.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Preset used when no config file is given.
    #[arg(long, default_value = "military")]
    preset: ScenarioKind,
    /// Output directory.
    #[arg(long, short, default_value = "results")]
    out: PathBuf,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ScenarioConfig::from_toml_str(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
            }
            None => ScenarioConfig::preset(self.preset),
        };
        cfg.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(cfg)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    emit(dir, name, contents).map_err(|e| anyhow!(e))
}

fn rows_of(metrics: Vec<RunMetrics>) -> Vec<SweepRow> {
    metrics
        .into_iter()
        .map(|m| SweepRow { axis_value: m.method.as_str().to_string(), seed: m.seed, metrics: m })
        .collect()
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { scenario, seeds, trace, positions } => {
            let base = scenario.load()?;
            let seeds = if seeds.is_empty() { vec![base.seed] } else { seeds };
            let mut metrics = Vec::new();
            for (i, &seed) in seeds.iter().enumerate() {
                let mut cfg = base.clone();
                cfg.seed = seed;
                let first = i == 0;
                let opts = RunOptions { trace: trace && first, positions: positions && first, ..Default::default() };
                let out = run_scenario(&cfg, &opts).map_err(|e| anyhow!("{e}"))?;
                if first {
                    if let Some(t) = &out.trace {
                        write(&scenario.out, "trace.csv", t)?;
                    }
                    if let Some(p) = &out.positions {
                        write(&scenario.out, "positions.csv", p)?;
                    }
                    write(&scenario.out, "ground_truth.csv", &out.ground_truth)?;
                }
                let m = &out.metrics;
                eprintln!(
                    "seed {seed}: {} conversations, tp {}, fp {}, overhead {} KB/s",
                    m.conversations,
                    fmt(m.tp_ratio),
                    fmt(m.fp_ratio),
                    fmt(m.overhead_kbps)
                );
                metrics.push(out.metrics);
            }
            let rows = rows_of(metrics);
            write(&scenario.out, "metrics.csv", &rows_csv(&rows))?;
            write(&scenario.out, "config.toml", &base.to_toml_string())?;
        }
        Cmd::Sweep { scenario, axis, values, seeds, jobs } => {
            let base = scenario.load()?;
            let rows = sweep(&base, axis, &values, &seeds, jobs).map_err(|e| anyhow!("{e}"))?;
            let name = axis.as_str();
            write(&scenario.out, &format!("sweep_{name}.csv"), &rows_csv(&rows))?;
            let aggs = aggregate(&rows);
            let table = aggregate_csv(&aggs);
            write(&scenario.out, &format!("sweep_{name}_summary.csv"), &table)?;
            print!("{table}");
        }
        Cmd::Reachability { scenario, seeds, horizon_min } => {
            let base = scenario.load()?;
            let horizon = SimTime::from_secs(horizon_min * 60);
            let mut out = String::from("seed,delay_s,reachable\n");
            for &seed in &seeds {
                let mut cfg = base.clone();
                cfg.seed = seed;
                let curve = reachability_curve(&cfg, horizon, SimTime::from_secs(60)).map_err(|e| anyhow!("{e}"))?;
                if curve.conversations == 0 {
                    bail!("seed {seed}: no conversations to follow");
                }
                for (d, f) in &curve.points {
                    out.push_str(&format!("{seed},{d},{f:.6}\n"));
                }
            }
            write(&scenario.out, "reachability.csv", &out)?;
            print!("{out}");
        }
        Cmd::Preset { scenario } => print!("{}", ScenarioConfig::preset(scenario).to_toml_string()),
    }
    Ok(())
}

fn fmt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}
