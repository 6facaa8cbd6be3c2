use std::collections::BTreeMap;

use super::agent::DatasetMessage;
use crate::ids::NodeId;
use crate::time::SimTime;
use crate::timeseries::SeriesId;

/// What the audit needs to know about one sent dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferRecord {
    pub sender: NodeId,
    pub peer: NodeId,
    pub transfer_id: u64,
    pub sent_at: SimTime,
    pub confirmed: bool,
    /// Per series, the covered span `[first_start, last_end)` in ms and the
    /// newest slot timestamp.
    pub spans: Vec<(SeriesId, u64, u64, SimTime)>,
}

impl TransferRecord {
    pub fn from_message(msg: &DatasetMessage) -> Self {
        let len = msg.dataset.slot_len();
        let spans = msg
            .dataset
            .entries()
            .iter()
            .map(|e| {
                let lo = len.start_of(e.run.first_slot).as_millis();
                let hi = len.start_of(e.run.last_slot() + 1).as_millis();
                (e.run.id, lo, hi, e.newest_slot_timestamp)
            })
            .collect();
        TransferRecord { sender: msg.from, peer: msg.to, transfer_id: msg.transfer_id, sent_at: msg.sent_at, confirmed: false, spans }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    Overlap { sender: NodeId, peer: NodeId, series: SeriesId, transfer_id: u64 },
    NotIncreasing { sender: NodeId, peer: NodeId, series: SeriesId, transfer_id: u64 },
    TooOld { sender: NodeId, peer: NodeId, series: SeriesId, transfer_id: u64, slot_start: SimTime },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub transfers: usize,
    pub confirmed: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditSummary {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that confirmed transfers per (sender, peer, series) cover disjoint
/// spans with strictly increasing newest timestamps, and that no transfer
/// carries a slot starting before `sent_at - aging_limit`.
pub fn audit_incrementality(records: &[TransferRecord], aging_limit: SimTime) -> AuditSummary {
    let mut sum = AuditSummary { transfers: records.len(), ..Default::default() };
    let mut order: Vec<&TransferRecord> = records.iter().collect();
    order.sort_by_key(|r| (r.sent_at, r.sender, r.transfer_id));
    let mut last: BTreeMap<(NodeId, NodeId, SeriesId), (u64, SimTime)> = BTreeMap::new();

    for r in order {
        let floor = r.sent_at.saturating_sub(aging_limit).as_millis();
        for &(series, lo, hi, newest) in &r.spans {
            if lo < floor {
                sum.violations.push(AuditViolation::TooOld {
                    sender: r.sender,
                    peer: r.peer,
                    series,
                    transfer_id: r.transfer_id,
                    slot_start: SimTime(lo),
                });
            }
            if !r.confirmed {
                continue;
            }
            let key = (r.sender, r.peer, series);
            if let Some(&(prev_hi, prev_newest)) = last.get(&key) {
                if lo < prev_hi {
                    sum.violations.push(AuditViolation::Overlap { sender: r.sender, peer: r.peer, series, transfer_id: r.transfer_id });
                }
                if newest <= prev_newest {
                    sum.violations.push(AuditViolation::NotIncreasing { sender: r.sender, peer: r.peer, series, transfer_id: r.transfer_id });
                }
            }
            last.insert(key, (hi, newest));
        }
        if r.confirmed {
            sum.confirmed += 1;
        }
    }
    sum
}
