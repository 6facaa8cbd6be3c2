//! The synchronization agent's gossip protocol.
//!
//! Every cycle an agent picks random peers among nodes within a hop-distance
//! threshold, computes for each peer the increment of every series since the
//! last confirmed transfer (bounded by an aging limit, with empty slots at
//! either end of a run dropped), and sends it. The per-peer watermark only
//! advances once the peer confirms receipt within the confirmation timeout.

mod agent;
mod audit;
mod dataset;
mod peers;
mod wire;

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::time::SimTime;
use crate::timeseries::{SlotLen, TimeSeriesError};

pub use agent::{
    on_receive_dataset, Confirmation, CycleReport, DatasetMessage, PeerSyncState, PendingTransfer, SyncAgent,
    Transport,
};
pub use audit::{audit_incrementality, AuditSummary, AuditViolation, TransferRecord};
pub use dataset::{build_dataset, determine_transfer_dataset, trim_empty_ends, DatasetEntry, TransferDataset};
pub use peers::{candidate_set, select_peers};
pub use wire::SizeModel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid protocol configuration: {0}")]
    Config(String),
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error(transparent)]
    TimeSeries(#[from] TimeSeriesError),
    #[error("transport refused message to node {0}")]
    Refused(NodeId),
}

/// Upper bound on peers contacted per cycle. Written as a number or `"unlimited"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PeerLimitRepr", into = "PeerLimitRepr")]
pub enum PeerLimit {
    Limited(usize),
    Unconstrained,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PeerLimitRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<PeerLimitRepr> for PeerLimit {
    type Error = String;

    fn try_from(r: PeerLimitRepr) -> Result<Self, String> {
        match r {
            PeerLimitRepr::Count(k) => Ok(PeerLimit::Limited(k)),
            PeerLimitRepr::Word(w) if w == "unlimited" => Ok(PeerLimit::Unconstrained),
            PeerLimitRepr::Word(w) => Err(format!("expected a peer count or \"unlimited\", got `{w}`")),
        }
    }
}

impl From<PeerLimit> for PeerLimitRepr {
    fn from(p: PeerLimit) -> Self {
        match p {
            PeerLimit::Limited(k) => PeerLimitRepr::Count(k),
            PeerLimit::Unconstrained => PeerLimitRepr::Word("unlimited".into()),
        }
    }
}

impl PeerLimit {
    pub fn cap(self, available: usize) -> usize {
        match self {
            PeerLimit::Limited(k) => k.min(available),
            PeerLimit::Unconstrained => available,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub max_peers: PeerLimit,
    pub max_hop_distance: u32,
    pub cycle_period: SimTime,
    /// Aging limit `T`: slots older than `now - T` are never transferred.
    pub aging_limit: SimTime,
    pub transfer_slot_len: SlotLen,
    pub confirm_timeout: SimTime,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::Config(m.to_string()));
        if self.max_hop_distance < 1 {
            return bad("max_hop_distance must be at least 1");
        }
        if self.cycle_period == SimTime::ZERO {
            return bad("cycle_period must be positive");
        }
        if self.aging_limit == SimTime::ZERO {
            return bad("aging_limit must be positive");
        }
        if self.confirm_timeout > self.cycle_period {
            return bad("confirm_timeout must not exceed cycle_period");
        }
        if self.max_peers == PeerLimit::Limited(0) {
            return bad("max_peers must be at least 1");
        }
        Ok(())
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            max_peers: PeerLimit::Limited(1),
            max_hop_distance: 1,
            cycle_period: SimTime::from_millis(9_375),
            aging_limit: SimTime::from_secs(300),
            transfer_slot_len: SlotLen::from_millis(100).expect("positive"),
            confirm_timeout: SimTime::from_millis(9_375),
        }
    }
}
