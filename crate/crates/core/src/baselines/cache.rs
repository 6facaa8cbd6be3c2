use std::collections::{BTreeMap, VecDeque};

use crate::protocol::TransferDataset;
use crate::time::SimTime;
use crate::timeseries::{SeriesId, SlotLen, TimeSeries};

/// A replicated series, complete over `covered`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub data: TimeSeries,
    pub covered: (SimTime, SimTime),
}

impl CacheEntry {
    pub fn covers(&self, from: SimTime, to: SimTime) -> bool {
        self.covered.0 <= from && to <= self.covered.1
    }

    pub fn active(&self, start: SimTime, end: SimTime) -> bool {
        self.data.flagged_within(start, end)
    }
}

/// One node's cache of replicated series. Size is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicaCache {
    slot_len: SlotLen,
    retention: SimTime,
    entries: BTreeMap<SeriesId, CacheEntry>,
}

impl ReplicaCache {
    pub fn new(slot_len: SlotLen, retention: SimTime) -> Self {
        ReplicaCache { slot_len, retention, entries: BTreeMap::new() }
    }

    pub fn get(&self, id: &SeriesId) -> Option<&CacheEntry> {
        self.entries.get(id)
    }

    pub fn covers(&self, id: &SeriesId, from: SimTime, to: SimTime) -> bool {
        self.entries.get(id).is_some_and(|e| e.covers(from, to))
    }

    /// Stores the slots of `id` found in `ds`, known complete over `covered`.
    /// Overlapping or touching coverage is merged; otherwise the new replica
    /// replaces the old one.
    pub fn insert(&mut self, id: SeriesId, ds: &TransferDataset, covered: (SimTime, SimTime)) {
        assert_eq!(ds.slot_len(), self.slot_len, "replicas share the monitor resolution");
        let mut entry = match self.entries.remove(&id) {
            Some(mut e) if e.covered.0 <= covered.1 && covered.0 <= e.covered.1 => {
                e.covered = (e.covered.0.min(covered.0), e.covered.1.max(covered.1));
                e
            }
            _ => CacheEntry { data: TimeSeries::new(id, self.slot_len), covered },
        };
        if let Some(d) = ds.entry(&id) {
            for k in d.run.flagged() {
                entry.data.flag(k);
            }
        }
        self.entries.insert(id, entry);
    }

    pub fn remove(&mut self, id: &SeriesId) -> bool {
        self.entries.remove(id).is_some()
    }

    pub fn ids(&self) -> impl Iterator<Item = SeriesId> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops data older than the retention and replicas left with none.
    pub fn prune(&mut self, now: SimTime) {
        let cutoff = now.saturating_sub(self.retention);
        self.entries.retain(|_, e| {
            e.data.prune_before(cutoff);
            e.covered.0 = e.covered.0.max(cutoff);
            e.covered.1 >= cutoff
        });
    }
}

/// Accesses per series within a sliding window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTable {
    window: SimTime,
    hits: BTreeMap<SeriesId, VecDeque<SimTime>>,
}

impl AccessTable {
    pub fn new(window: SimTime) -> Self {
        AccessTable { window, hits: BTreeMap::new() }
    }

    pub fn record(&mut self, id: SeriesId, now: SimTime) {
        self.hits.entry(id).or_default().push_back(now);
    }

    /// Accesses in `(now - window, now]`.
    pub fn frequency(&self, id: &SeriesId, now: SimTime) -> usize {
        let floor = now.saturating_sub(self.window);
        self.hits.get(id).map_or(0, |q| q.iter().filter(|&&t| t > floor && t <= now).count())
    }

    pub fn expire(&mut self, now: SimTime) {
        let floor = now.saturating_sub(self.window);
        self.hits.retain(|_, q| {
            while q.front().is_some_and(|&t| t <= floor) {
                q.pop_front();
            }
            !q.is_empty()
        });
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::series_dataset;
    use crate::ids::{Endpoint, NodeId, ServiceId};
    use crate::timeseries::TimeSeriesStore;

    fn id() -> SeriesId {
        SeriesId::new(
            Endpoint::Service { service: ServiceId(1), host: NodeId(1) },
            Endpoint::Service { service: ServiceId(2), host: NodeId(2) },
        )
        .unwrap()
    }

    fn sample_ds(times: &[u64]) -> TransferDataset {
        let len = SlotLen::from_millis(100).unwrap();
        let mut st = TimeSeriesStore::new(len, SimTime::from_secs(600));
        for &t in times {
            st.record_occurrence(id(), SimTime::from_secs(t));
        }
        series_dataset(st.get(&id()), len, SimTime::ZERO, SimTime::from_secs(1000))
    }

    #[test]
    fn coverage_merges_when_touching() {
        let mut c = ReplicaCache::new(SlotLen::from_millis(100).unwrap(), SimTime::from_secs(600));
        c.insert(id(), &sample_ds(&[10]), (SimTime::from_secs(5), SimTime::from_secs(20)));
        assert!(c.covers(&id(), SimTime::from_secs(6), SimTime::from_secs(19)));
        assert!(!c.covers(&id(), SimTime::from_secs(6), SimTime::from_secs(30)));
        c.insert(id(), &sample_ds(&[25]), (SimTime::from_secs(20), SimTime::from_secs(40)));
        assert!(c.covers(&id(), SimTime::from_secs(6), SimTime::from_secs(30)));
        assert_eq!(c.get(&id()).unwrap().data.len(), 2);
        // disjoint coverage replaces
        c.insert(id(), &sample_ds(&[100]), (SimTime::from_secs(90), SimTime::from_secs(110)));
        assert_eq!(c.get(&id()).unwrap().covered, (SimTime::from_secs(90), SimTime::from_secs(110)));
        assert_eq!(c.get(&id()).unwrap().data.len(), 1);
        assert!(c.get(&id()).unwrap().active(SimTime::from_secs(95), SimTime::from_secs(105)));
    }

    #[test]
    fn empty_answer_still_records_coverage() {
        let mut c = ReplicaCache::new(SlotLen::from_millis(100).unwrap(), SimTime::from_secs(600));
        c.insert(id(), &sample_ds(&[]), (SimTime::from_secs(5), SimTime::from_secs(20)));
        assert!(c.covers(&id(), SimTime::from_secs(5), SimTime::from_secs(20)));
        assert!(!c.get(&id()).unwrap().active(SimTime::from_secs(5), SimTime::from_secs(20)));
    }

    #[test]
    fn prune_clips_coverage() {
        let mut c = ReplicaCache::new(SlotLen::from_millis(100).unwrap(), SimTime::from_secs(60));
        c.insert(id(), &sample_ds(&[10]), (SimTime::from_secs(5), SimTime::from_secs(20)));
        c.prune(SimTime::from_secs(70));
        assert_eq!(c.get(&id()).unwrap().covered.0, SimTime::from_secs(10));
        c.prune(SimTime::from_secs(100));
        assert!(c.is_empty());
    }

    #[test]
    fn access_window_slides() {
        let mut t = AccessTable::new(SimTime::from_secs(300));
        for s in [0, 100, 200, 250] {
            t.record(id(), SimTime::from_secs(s));
        }
        assert_eq!(t.frequency(&id(), SimTime::from_secs(250)), 3);
        assert_eq!(t.frequency(&id(), SimTime::from_secs(450)), 2);
        t.expire(SimTime::from_secs(600));
        assert!(t.is_empty());
    }
}
