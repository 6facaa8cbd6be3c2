use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::agent::PeerSyncState;
use super::{ProtocolConfig, ProtocolError};
use crate::ids::NodeId;
use crate::time::SimTime;
use crate::timeseries::{SeriesId, SlotLen, SlotRun, TimeSeriesStore};

/// One series' increment: the slot run plus the timestamp of its newest slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub run: SlotRun,
    pub newest_slot_timestamp: SimTime,
}

/// What one agent sends one peer in one cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferDataset {
    slot_len: SlotLen,
    entries: Vec<DatasetEntry>,
}

impl TransferDataset {
    pub fn new(slot_len: SlotLen, entries: Vec<DatasetEntry>) -> Self {
        TransferDataset { slot_len, entries }
    }

    pub fn slot_len(&self) -> SlotLen {
        self.slot_len
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn series_count(&self) -> usize {
        self.entries.len()
    }

    /// Total slots carried, interior empties included.
    pub fn slot_count(&self) -> usize {
        self.entries.iter().map(|e| e.run.flags.len()).sum()
    }

    pub fn entry(&self, id: &SeriesId) -> Option<&DatasetEntry> {
        self.entries.iter().find(|e| e.run.id == *id)
    }

    pub fn runs(&self) -> impl Iterator<Item = &SlotRun> {
        self.entries.iter().map(|e| &e.run)
    }

    /// Each run must be non-empty, start and end on a flagged slot, carry a
    /// newest timestamp matching its last slot, and name each series once.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            let r = &e.run;
            let bad = |m: &str| Err(ProtocolError::Malformed(format!("{} -> {}: {m}", r.id.source, r.id.target)));
            if r.flags.is_empty() {
                return bad("empty run");
            }
            if !r.flags[0] || !r.flags[r.flags.len() - 1] {
                return bad("run starts or ends on an empty slot");
            }
            if e.newest_slot_timestamp != self.slot_len.start_of(r.last_slot()) {
                return bad("newest timestamp does not match the run");
            }
            if !seen.insert(r.id) {
                return bad("series listed twice");
            }
        }
        Ok(())
    }

    /// Start times of every slot position each entry covers.
    pub fn slot_timestamps(&self) -> impl Iterator<Item = (SeriesId, Vec<SimTime>)> + '_ {
        self.entries.iter().map(|e| {
            let r = &e.run;
            (r.id, (r.first_slot..=r.last_slot()).map(|k| self.slot_len.start_of(k)).collect())
        })
    }
}

/// Drops leading and trailing empty slots; interior slots are kept verbatim.
/// Returns the offset of the first kept slot together with the kept slice.
pub fn trim_empty_ends(run: &[bool]) -> (usize, &[bool]) {
    match (run.iter().position(|&f| f), run.iter().rposition(|&f| f)) {
        (Some(first), Some(last)) => (first, &run[first..=last]),
        _ => (run.len(), &[]),
    }
}

/// Builds a dataset of every series' slots (at the transfer resolution) that
/// start after the series' watermark and no earlier than `now - aging_limit`.
/// Series without a qualifying flagged slot are omitted.
pub fn build_dataset(
    store: &TimeSeriesStore,
    now: SimTime,
    cfg: &ProtocolConfig,
    watermark: impl Fn(&SeriesId) -> Option<SimTime>,
) -> TransferDataset {
    let tl = cfg.transfer_slot_len;
    let sl = store.slot_len();
    let (t_ms, s_ms) = (tl.millis(), sl.millis());
    let age_floor = now.saturating_sub(cfg.aging_limit).as_millis();
    let first_by_age = age_floor.div_ceil(t_ms);
    let mut entries = Vec::new();
    let mut picked: Vec<u64> = Vec::new();

    for series in store.iter() {
        let Some(newest) = series.newest() else { continue };
        let mut lo = first_by_age;
        if let Some(ts) = watermark(&series.id()) {
            lo = lo.max(ts.as_millis() / t_ms + 1);
        }
        // newest transfer slot this series can produce
        let newest_t = (newest * s_ms + s_ms - 1) / t_ms;
        if newest_t < lo {
            continue;
        }
        picked.clear();
        // first store slot whose span reaches transfer slot `lo`
        let first_store = (lo * t_ms) / s_ms;
        for k in series.flagged_from(first_store) {
            let t_lo = (k * s_ms) / t_ms;
            let t_hi = (k * s_ms + s_ms - 1) / t_ms;
            for j in t_lo.max(lo)..=t_hi {
                if picked.last() != Some(&j) {
                    picked.push(j);
                }
            }
        }
        let (Some(&first), Some(&last)) = (picked.first(), picked.last()) else { continue };
        let mut flags = vec![false; (last - first + 1) as usize];
        for &j in &picked {
            flags[(j - first) as usize] = true;
        }
        entries.push(DatasetEntry {
            run: SlotRun { id: series.id(), first_slot: first, flags },
            newest_slot_timestamp: tl.start_of(last),
        });
    }
    TransferDataset::new(tl, entries)
}

/// The increment for `peer`: per series, slots newer than `t_s(series, peer)`
/// and within the aging limit.
pub fn determine_transfer_dataset(
    store: &TimeSeriesStore,
    sync: &PeerSyncState,
    peer: NodeId,
    now: SimTime,
    cfg: &ProtocolConfig,
) -> TransferDataset {
    build_dataset(store, now, cfg, |id| sync.last_synced(peer, id))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ids::{Endpoint, ServiceId};
    use proptest::prelude::*;

    fn len(ms: u64) -> SlotLen {
        SlotLen::from_millis(ms).unwrap()
    }

    fn series(n: u16) -> SeriesId {
        SeriesId::new(
            Endpoint::Service { service: ServiceId(n), host: NodeId(1) },
            Endpoint::Service { service: ServiceId(n + 10), host: NodeId(2) },
        )
        .unwrap()
    }

    #[test]
    fn trim_examples() {
        let (x, e) = (true, false);
        assert_eq!(trim_empty_ends(&[e, x, e, x, e]), (1, &[x, e, x][..]));
        assert_eq!(trim_empty_ends(&[x]), (0, &[x][..]));
        assert_eq!(trim_empty_ends(&[e, e, e]).1, &[] as &[bool]);
        assert_eq!(trim_empty_ends(&[]).1, &[] as &[bool]);
    }

    proptest! {
        #[test]
        fn trim_keeps_every_flag_and_interior(run in prop::collection::vec(any::<bool>(), 0..64)) {
            let (off, kept) = trim_empty_ends(&run);
            prop_assert_eq!(kept.iter().filter(|&&f| f).count(), run.iter().filter(|&&f| f).count());
            if !kept.is_empty() {
                prop_assert!(kept[0] && kept[kept.len() - 1]);
                prop_assert_eq!(kept, &run[off..off + kept.len()]);
                prop_assert!(run[..off].iter().all(|&f| !f));
                prop_assert!(run[off + kept.len()..].iter().all(|&f| !f));
            }
        }
    }

    /// The five-series layout: one-second slots, now = 10 s, previous cycle at
    /// 6 s, aging limit 8 s (slots starting before 2 s are too old).
    pub(crate) fn worked_store() -> (TimeSeriesStore, PeerSyncState, ProtocolConfig, NodeId) {
        let mut st = TimeSeriesStore::new(len(1000), SimTime::from_secs(3600));
        let mut sync = PeerSyncState::default();
        let peer = NodeId(9);
        let mut flag = |id: SeriesId, slots: &[u64]| {
            for &k in slots {
                st.record_occurrence(id, SimTime::from_secs(k));
            }
        };
        // D1: synced through 5; new X _ X then a trailing empty slot
        flag(series(1), &[3, 4, 5, 6, 8]);
        // D2: synced through 3; late arrivals at 4 and 5 plus new data
        flag(series(2), &[1, 2, 3, 4, 5, 7, 8]);
        // D3: synced through 2; only slots before the previous cycle hold data
        flag(series(3), &[1, 3, 4]);
        // D4: nothing newer than its watermark
        flag(series(4), &[2, 5, 8]);
        // D5: never sent, but its only value is older than the age limit
        flag(series(5), &[1]);
        for (id, ts) in [(1, 5), (2, 3), (3, 2), (4, 8)] {
            sync.advance(peer, series(id), SimTime::from_secs(ts));
        }
        let cfg = ProtocolConfig {
            aging_limit: SimTime::from_secs(8),
            transfer_slot_len: len(1000),
            ..ProtocolConfig::default()
        };
        (st, sync, cfg, peer)
    }

    #[test]
    fn worked_dataset_selection() {
        let (st, sync, cfg, peer) = worked_store();
        let ds = determine_transfer_dataset(&st, &sync, peer, SimTime::from_secs(10), &cfg);
        ds.validate().unwrap();

        let d1 = ds.entry(&series(1)).unwrap();
        assert_eq!(d1.run.first_slot, 6);
        assert_eq!(d1.run.flags, vec![true, false, true]);
        assert_eq!(d1.newest_slot_timestamp, SimTime::from_secs(8));

        let d2 = ds.entry(&series(2)).unwrap();
        assert_eq!(d2.run.first_slot, 4);
        assert_eq!(d2.run.flags, vec![true, true, false, true, true]);

        let d3 = ds.entry(&series(3)).unwrap();
        assert_eq!(d3.run.flags.len(), 2);
        assert_eq!(d3.run.first_slot, 3);

        assert!(ds.entry(&series(4)).is_none());
        assert!(ds.entry(&series(5)).is_none());
        assert_eq!(ds.series_count(), 3);
        assert_eq!(ds.slot_count(), 3 + 5 + 2);
    }

    #[test]
    fn fully_synced_store_yields_empty_dataset() {
        let (st, _, cfg, peer) = worked_store();
        let mut sync = PeerSyncState::default();
        for s in st.iter() {
            if let Some(n) = s.newest() {
                sync.advance(peer, s.id(), SimTime::from_secs(n));
            }
        }
        assert!(determine_transfer_dataset(&st, &sync, peer, SimTime::from_secs(10), &cfg).is_empty());
    }

    #[test]
    fn coarse_transfer_slots_aggregate() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(3600));
        for t in [100, 250, 1_950, 4_050] {
            st.record_occurrence(series(1), SimTime(t));
        }
        let cfg = ProtocolConfig { transfer_slot_len: len(1000), aging_limit: SimTime::from_secs(100), ..Default::default() };
        let ds = build_dataset(&st, SimTime::from_secs(5), &cfg, |_| None);
        let e = ds.entry(&series(1)).unwrap();
        assert_eq!(e.run.first_slot, 0);
        assert_eq!(e.run.flags, vec![true, true, false, false, true]);

        // watermark at slot 1 start: only slot 4 remains
        let ds = build_dataset(&st, SimTime::from_secs(5), &cfg, |_| Some(SimTime::from_secs(1)));
        assert_eq!(ds.entry(&series(1)).unwrap().run.first_slot, 4);
    }

    #[test]
    fn validation_rejects_malformed() {
        let run = SlotRun { id: series(1), first_slot: 2, flags: vec![false, true] };
        let ds = TransferDataset::new(len(1000), vec![DatasetEntry { run, newest_slot_timestamp: SimTime::from_secs(3) }]);
        assert!(matches!(ds.validate(), Err(ProtocolError::Malformed(_))));

        let run = SlotRun { id: series(1), first_slot: 2, flags: vec![true] };
        let ds = TransferDataset::new(len(1000), vec![DatasetEntry { run, newest_slot_timestamp: SimTime::from_secs(5) }]);
        assert!(ds.validate().is_err());
    }

    proptest! {
        #[test]
        fn dataset_respects_watermark_and_age(
            slots in prop::collection::btree_set(0u64..600, 1..40),
            ts in prop::option::of(0u64..600),
            now_s in 0u64..70,
            ratio in prop::sample::select(vec![1u64, 2, 5, 10]),
        ) {
            let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(3600));
            for k in &slots {
                st.record_occurrence(series(1), SimTime(k * 100));
            }
            let cfg = ProtocolConfig {
                transfer_slot_len: len(100 * ratio),
                aging_limit: SimTime::from_secs(20),
                ..Default::default()
            };
            let now = SimTime::from_secs(now_s);
            let wm = ts.map(|t| SimTime(t * 100 * ratio));
            let ds = build_dataset(&st, now, &cfg, |_| wm);
            ds.validate().unwrap();
            // oracle: aggregate by brute force, then filter
            let expected: BTreeSet<u64> = slots
                .iter()
                .map(|k| k / ratio)
                .filter(|j| j * 100 * ratio + cfg.aging_limit.as_millis() >= now.as_millis())
                .filter(|j| wm.is_none_or(|w| j * 100 * ratio > w.as_millis()))
                .collect();
            let got: BTreeSet<u64> = ds.runs().flat_map(|r| r.flagged().collect::<Vec<_>>()).collect();
            prop_assert_eq!(got, expected);
        }
    }
}
