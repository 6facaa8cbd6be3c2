use std::collections::BTreeMap;

use rand::Rng;

use super::dataset::{determine_transfer_dataset, TransferDataset};
use super::peers::{candidate_set, select_peers};
use super::{ProtocolConfig, ProtocolError};
use crate::ids::NodeId;
use crate::sim::HopTable;
use crate::time::SimTime;
use crate::timeseries::{SeriesId, TimeSeriesStore};

/// A dataset in flight from `from` to `to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMessage {
    pub transfer_id: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub sent_at: SimTime,
    pub dataset: TransferDataset,
}

/// Receipt for a dataset: the newest slot timestamp of every series it held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confirmation {
    pub transfer_id: u64,
    /// The node that received the dataset.
    pub from: NodeId,
    pub to: NodeId,
    pub newest: Vec<(SeriesId, SimTime)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingTransfer {
    pub transfer_id: u64,
    pub peer: NodeId,
    pub sent_at: SimTime,
}

/// Per-peer watermarks `t_s(d, i)` and the at-most-one in-flight transfer per peer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeerSyncState {
    last_synced: BTreeMap<(NodeId, SeriesId), SimTime>,
    pending: BTreeMap<NodeId, PendingTransfer>,
}

impl PeerSyncState {
    pub fn last_synced(&self, peer: NodeId, id: &SeriesId) -> Option<SimTime> {
        self.last_synced.get(&(peer, *id)).copied()
    }

    /// Raises the watermark; never lowers it.
    pub fn advance(&mut self, peer: NodeId, id: SeriesId, ts: SimTime) {
        let e = self.last_synced.entry((peer, id)).or_insert(ts);
        *e = (*e).max(ts);
    }

    pub fn pending(&self, peer: NodeId) -> Option<&PendingTransfer> {
        self.pending.get(&peer)
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn watermarks(&self) -> impl Iterator<Item = (NodeId, SeriesId, SimTime)> + '_ {
        self.last_synced.iter().map(|(&(p, id), &t)| (p, id, t))
    }

    fn begin(&mut self, p: PendingTransfer) {
        self.pending.insert(p.peer, p);
    }

    /// Clears every pending transfer that has waited at least `timeout`.
    pub fn expire(&mut self, now: SimTime, timeout: SimTime) -> Vec<PendingTransfer> {
        let stale: Vec<NodeId> = self
            .pending
            .values()
            .filter(|p| now.saturating_sub(p.sent_at) >= timeout)
            .map(|p| p.peer)
            .collect();
        stale.into_iter().filter_map(|peer| self.pending.remove(&peer)).collect()
    }
}

/// Hands dataset messages to whatever carries them.
pub trait Transport {
    fn send_dataset(&mut self, msg: DatasetMessage) -> Result<(), ProtocolError>;
}

impl Transport for Vec<DatasetMessage> {
    fn send_dataset(&mut self, msg: DatasetMessage) -> Result<(), ProtocolError> {
        self.push(msg);
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleReport {
    pub candidates: usize,
    pub skipped_pending: usize,
    pub selected: Vec<NodeId>,
    pub sent: Vec<u64>,
    pub refused: Vec<NodeId>,
    pub expired: Vec<PendingTransfer>,
}

/// One node's synchronization agent.
#[derive(Debug, Clone)]
pub struct SyncAgent {
    node: NodeId,
    cfg: ProtocolConfig,
    state: PeerSyncState,
    next_transfer: u64,
}

impl SyncAgent {
    pub fn new(node: NodeId, cfg: ProtocolConfig) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        Ok(SyncAgent { node, cfg, state: PeerSyncState::default(), next_transfer: 0 })
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PeerSyncState {
        &self.state
    }

    /// Selects peers, builds their increments and hands non-empty datasets to
    /// `transport`. Peers still awaiting a confirmation are not eligible.
    pub fn run_cycle<R: Rng + ?Sized>(
        &mut self,
        now: SimTime,
        store: &TimeSeriesStore,
        hops: &HopTable,
        rng: &mut R,
        transport: &mut dyn Transport,
    ) -> CycleReport {
        let mut report = CycleReport { expired: self.state.expire(now, self.cfg.confirm_timeout), ..Default::default() };
        let all = candidate_set(hops, self.node, self.cfg.max_hop_distance);
        report.candidates = all.len();
        let free: Vec<NodeId> = all.into_iter().filter(|p| self.state.pending(*p).is_none()).collect();
        report.skipped_pending = report.candidates - free.len();
        report.selected = select_peers(&free, self.cfg.max_peers, rng);

        for &peer in &report.selected {
            let dataset = determine_transfer_dataset(store, &self.state, peer, now, &self.cfg);
            if dataset.is_empty() {
                continue;
            }
            let transfer_id = self.next_transfer;
            self.next_transfer += 1;
            let msg = DatasetMessage { transfer_id, from: self.node, to: peer, sent_at: now, dataset };
            match transport.send_dataset(msg) {
                Ok(()) => {
                    self.state.begin(PendingTransfer { transfer_id, peer, sent_at: now });
                    report.sent.push(transfer_id);
                }
                Err(_) => report.refused.push(peer),
            }
        }
        report
    }

    /// Applies a confirmation if it answers the peer's pending transfer and
    /// arrives before the timeout. Returns whether it was accepted.
    pub fn on_confirm(&mut self, conf: &Confirmation, now: SimTime) -> bool {
        let Some(p) = self.state.pending(conf.from) else { return false };
        if p.transfer_id != conf.transfer_id || now.saturating_sub(p.sent_at) >= self.cfg.confirm_timeout {
            return false;
        }
        self.state.pending.remove(&conf.from);
        for &(id, ts) in &conf.newest {
            self.state.advance(conf.from, id, ts);
        }
        true
    }

    /// Abandons the pending transfer to `peer` if it is `transfer_id` and has
    /// waited out the timeout. Watermarks are untouched.
    pub fn on_timeout(&mut self, peer: NodeId, transfer_id: u64, now: SimTime) -> bool {
        match self.state.pending(peer) {
            Some(p) if p.transfer_id == transfer_id && now.saturating_sub(p.sent_at) >= self.cfg.confirm_timeout => {
                self.state.pending.remove(&peer);
                true
            }
            _ => false,
        }
    }
}

/// Merges a received dataset and produces the confirmation for its sender.
/// A malformed dataset is rejected without touching the store.
pub fn on_receive_dataset(store: &mut TimeSeriesStore, msg: &DatasetMessage) -> Result<Confirmation, ProtocolError> {
    msg.dataset.validate()?;
    store.merge_runs(msg.dataset.slot_len(), msg.dataset.runs())?;
    Ok(Confirmation {
        transfer_id: msg.transfer_id,
        from: msg.to,
        to: msg.from,
        newest: msg.dataset.entries().iter().map(|e| (e.run.id, e.newest_slot_timestamp)).collect(),
    })
}
