//! Synthetic two-tier service system: conversations with ground truth,
//! per-node monitors and dependence-graph discovery.

mod conversation;
mod discovery;
mod topology;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::time::SimTime;
use crate::timeseries::TimeSeriesStore;

pub use conversation::{
    CascadeConfig, CascadeEvent, Conversation, ConversationEngine, ConversationId, ConversationStatus, Observation,
    ServiceDelivery, StepOutput,
};
pub use discovery::{active_from, closure, discover_dg, fp_ratio, tp_ratio, DependenceGraph};
pub use topology::{EntryMethod, ServiceInfo, ServiceTopology, Tier, TopologyConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid workload configuration: {0}")]
    Config(String),
}

/// Client behaviour and service timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Mean time between a client's conversations, seconds.
    pub request_period_s: f64,
    /// Each gap is drawn uniformly from `period ± jitter`, seconds.
    pub request_jitter_s: f64,
    pub response_timeout_s: f64,
    pub service_time_s: f64,
    pub service_delivery: ServiceDelivery,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            request_period_s: 30.0,
            request_jitter_s: 5.0,
            response_timeout_s: 60.0,
            service_time_s: 1.0,
            service_delivery: ServiceDelivery::Reliable,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: &str| Err(WorkloadError::Config(m.to_string()));
        if !(self.request_period_s > 0.0) {
            return bad("workload.request_period_s must be positive");
        }
        if !(0.0..self.request_period_s).contains(&self.request_jitter_s) {
            return bad("workload.request_jitter_s must lie in [0, request_period_s)");
        }
        if !(self.response_timeout_s > 0.0) {
            return bad("workload.response_timeout_s must be positive");
        }
        if !(self.service_time_s >= 0.0) {
            return bad("workload.service_time_s must be non-negative");
        }
        Ok(())
    }

    pub fn cascade(&self) -> CascadeConfig {
        CascadeConfig {
            service_time: SimTime::from_secs_f64(self.service_time_s),
            response_timeout: SimTime::from_secs_f64(self.response_timeout_s),
            delivery: self.service_delivery,
        }
    }

    /// First request time for a client: a uniform phase within one period.
    pub fn first_request<R: Rng + ?Sized>(&self, rng: &mut R) -> SimTime {
        SimTime::from_secs_f64(rng.gen::<f64>() * self.request_period_s)
    }

    pub fn next_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> SimTime {
        let j = self.request_jitter_s;
        let gap = if j > 0.0 { self.request_period_s + rng.gen_range(-j..=j) } else { self.request_period_s };
        SimTime::from_secs_f64(gap)
    }
}

/// Applies an observation to the monitor store of its node.
pub fn monitor_observe(stores: &mut [TimeSeriesStore], obs: &Observation) {
    stores[obs.node.idx()].record_occurrence(obs.series, obs.at);
}

/// Nodes with a store; convenience for iterating monitors.
pub fn monitor_nodes(stores: &[TimeSeriesStore]) -> impl Iterator<Item = NodeId> {
    (0..stores.len()).map(NodeId::from)
}
