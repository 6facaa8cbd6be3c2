//! Scenario configuration, the experiment runner, metrics and result files.

mod bench;
mod config;
mod gossip;
mod meter;
mod method;
mod reach;
mod runner;
mod sweep;

pub use bench::Bench;
pub use config::{
    AnalysisScope, BaselineConfig, ConfigError, MethodKind, NetworkConfig, ProtocolSection, ScenarioConfig,
    ScenarioKind, PRESET_RADIO_RANGE_M,
};
pub use gossip::{Gossip, GossipEvent, GossipMode};
pub use meter::{fold_trace_bytes, Meter, TraceEvent, TRACE_HEADER};
pub use method::{Ctx, Method};
pub use reach::{reachability_curve, ReachabilityCurve};
pub use runner::{build_world, run_scenario, run_with, sim_end, ConversationResult, RunMetrics, RunOptions, RunOutput};
pub use sweep::{aggregate, aggregate_csv, emit, mean_stderr, rows_csv, run_all, sweep, Aggregate, Axis, SweepRow, ROWS_HEADER};
