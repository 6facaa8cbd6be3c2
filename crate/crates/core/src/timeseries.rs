//! Slot-based Boolean time series and the per-node store that holds them.
//!
//! A series records, per fixed-length slot, whether a dependence occurred in
//! that slot. Slots are epoch-aligned: slot `k` covers `[k*len, (k+1)*len)`.
//! Empty slots are never stored; a slot is flagged iff its index is present.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ids::{Endpoint, NodeId};
use crate::time::{format_secs, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeSeriesError {
    #[error("slot length must be positive")]
    ZeroSlotLen,
    #[error("slot lengths {0} ms and {1} ms are not integer multiples of one another")]
    NonCommensurate(u64, u64),
    #[error("a series cannot depend on itself ({0})")]
    SelfDependence(Endpoint),
}

/// Length of one slot, in milliseconds. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SlotLen(u64);

impl SlotLen {
    pub fn from_millis(ms: u64) -> Result<Self, TimeSeriesError> {
        if ms == 0 {
            return Err(TimeSeriesError::ZeroSlotLen);
        }
        Ok(SlotLen(ms))
    }

    pub fn from_secs_f64(s: f64) -> Result<Self, TimeSeriesError> {
        Self::from_millis(SimTime::from_secs_f64(s).as_millis())
    }

    pub fn millis(self) -> u64 {
        self.0
    }

    /// Index of the slot containing `t`.
    pub fn slot_of(self, t: SimTime) -> u64 {
        t.as_millis() / self.0
    }

    /// Start time of slot `index`.
    pub fn start_of(self, index: u64) -> SimTime {
        SimTime(index * self.0)
    }

    pub fn commensurate_with(self, other: SlotLen) -> bool {
        self.0 % other.0 == 0 || other.0 % self.0 == 0
    }

    fn check_commensurate(self, other: SlotLen) -> Result<(), TimeSeriesError> {
        if self.commensurate_with(other) {
            Ok(())
        } else {
            Err(TimeSeriesError::NonCommensurate(self.0, other.0))
        }
    }
}

/// Ordered dependence pair identifying one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesId {
    pub source: Endpoint,
    pub target: Endpoint,
}

impl SeriesId {
    pub fn new(source: Endpoint, target: Endpoint) -> Result<Self, TimeSeriesError> {
        if source == target {
            return Err(TimeSeriesError::SelfDependence(source));
        }
        Ok(SeriesId { source, target })
    }

    fn first_with_source(source: Endpoint) -> Self {
        SeriesId { source, target: Endpoint::MIN }
    }

    fn last_with_source(source: Endpoint) -> Self {
        SeriesId { source, target: Endpoint::MAX }
    }
}

/// Maps slot index `index` at `from` resolution onto the inclusive index range
/// it covers at `to` resolution. Caller guarantees commensurate lengths.
fn map_slot(index: u64, from: SlotLen, to: SlotLen) -> (u64, u64) {
    if from.0 == to.0 {
        (index, index)
    } else if from.0 > to.0 {
        let k = from.0 / to.0;
        (index * k, index * k + k - 1)
    } else {
        let k = to.0 / from.0;
        (index / k, index / k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeries {
    id: SeriesId,
    slot_len: SlotLen,
    slots: BTreeSet<u64>,
}

impl TimeSeries {
    pub fn new(id: SeriesId, slot_len: SlotLen) -> Self {
        TimeSeries { id, slot_len, slots: BTreeSet::new() }
    }

    pub fn from_flags(id: SeriesId, slot_len: SlotLen, flags: &[bool]) -> Self {
        let slots = flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i as u64)
            .collect();
        TimeSeries { id, slot_len, slots }
    }

    pub fn id(&self) -> SeriesId {
        self.id
    }

    pub fn slot_len(&self) -> SlotLen {
        self.slot_len
    }

    pub fn is_flagged(&self, index: u64) -> bool {
        self.slots.contains(&index)
    }

    pub fn flag(&mut self, index: u64) {
        self.slots.insert(index);
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    /// Flagged slot indices in ascending order.
    pub fn flagged(&self) -> impl DoubleEndedIterator<Item = u64> + '_ {
        self.slots.iter().copied()
    }

    pub fn flagged_from(&self, first: u64) -> impl Iterator<Item = u64> + '_ {
        self.slots.range(first..).copied()
    }

    pub fn newest(&self) -> Option<u64> {
        self.slots.last().copied()
    }

    /// True iff some flagged slot overlaps the closed interval `[start, end]`.
    pub fn flagged_within(&self, start: SimTime, end: SimTime) -> bool {
        let lo = self.slot_len.slot_of(start);
        let hi = self.slot_len.slot_of(end);
        self.slots.range(lo..=hi).next().is_some()
    }

    /// Re-expresses the series at `target` slot length. Aggregation ORs the
    /// covered slots; splitting copies each flag into every sub-slot.
    pub fn resample(&self, target: SlotLen) -> Result<TimeSeries, TimeSeriesError> {
        self.slot_len.check_commensurate(target)?;
        let mut out = TimeSeries::new(self.id, target);
        for &s in &self.slots {
            let (lo, hi) = map_slot(s, self.slot_len, target);
            out.slots.extend(lo..=hi);
        }
        Ok(out)
    }

    pub(crate) fn prune_before(&mut self, cutoff: SimTime) {
        // keep slot k iff (k+1)*len > cutoff
        let first_kept = cutoff.as_millis() / self.slot_len.0;
        self.slots = self.slots.split_off(&first_kept);
    }
}

/// A contiguous run of slots for one series, as carried in transfer datasets.
/// `flags[i]` is the state of slot `first_slot + i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRun {
    pub id: SeriesId,
    pub first_slot: u64,
    pub flags: Vec<bool>,
}

impl SlotRun {
    pub fn flagged(&self) -> impl Iterator<Item = u64> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| self.first_slot + i as u64)
    }

    pub fn last_slot(&self) -> u64 {
        self.first_slot + self.flags.len().saturating_sub(1) as u64
    }
}

/// A node's local table of series, all at one slot length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSeriesStore {
    slot_len: SlotLen,
    retention: SimTime,
    series: BTreeMap<SeriesId, TimeSeries>,
}

impl TimeSeriesStore {
    pub fn new(slot_len: SlotLen, retention: SimTime) -> Self {
        TimeSeriesStore { slot_len, retention, series: BTreeMap::new() }
    }

    pub fn slot_len(&self) -> SlotLen {
        self.slot_len
    }

    pub fn retention(&self) -> SimTime {
        self.retention
    }

    /// Flags the slot containing `time`, creating the series on first use.
    pub fn record_occurrence(&mut self, id: SeriesId, time: SimTime) {
        let slot = self.slot_len.slot_of(time);
        self.series_mut(id).flag(slot);
    }

    fn series_mut(&mut self, id: SeriesId) -> &mut TimeSeries {
        let len = self.slot_len;
        self.series.entry(id).or_insert_with(|| TimeSeries::new(id, len))
    }

    pub fn is_flagged(&self, id: &SeriesId, slot: u64) -> bool {
        self.series.get(id).is_some_and(|s| s.is_flagged(slot))
    }

    pub fn get(&self, id: &SeriesId) -> Option<&TimeSeries> {
        self.series.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &TimeSeries> {
        self.series.values()
    }

    /// Series whose source is `source`, in target order.
    pub fn series_from(&self, source: Endpoint) -> impl Iterator<Item = &TimeSeries> {
        self.series
            .range(SeriesId::first_with_source(source)..=SeriesId::last_with_source(source))
            .map(|(_, s)| s)
    }

    pub fn series_count(&self) -> usize {
        self.series.len()
    }

    pub fn flagged_slot_count(&self) -> usize {
        self.series.values().map(TimeSeries::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.series.values().all(TimeSeries::is_empty)
    }

    /// Drops every slot that ends at or before `now - retention`. Series that
    /// become empty stay registered.
    pub fn prune(&mut self, now: SimTime) {
        let cutoff = now.saturating_sub(self.retention);
        if cutoff == SimTime::ZERO {
            return;
        }
        for s in self.series.values_mut() {
            s.prune_before(cutoff);
        }
    }

    /// OR-merges runs expressed at `run_slot_len` into the store, resampling
    /// to the store's resolution. Empty slots never clear existing flags.
    pub fn merge_runs<'a>(
        &mut self,
        run_slot_len: SlotLen,
        runs: impl IntoIterator<Item = &'a SlotRun>,
    ) -> Result<(), TimeSeriesError> {
        run_slot_len.check_commensurate(self.slot_len)?;
        let store_len = self.slot_len;
        for run in runs {
            let series = self.series_mut(run.id);
            for s in run.flagged() {
                let (lo, hi) = map_slot(s, run_slot_len, store_len);
                series.slots.extend(lo..=hi);
            }
        }
        Ok(())
    }

    /// OR-merges another store (of commensurate resolution) into this one.
    pub fn merge_store(&mut self, other: &TimeSeriesStore) -> Result<(), TimeSeriesError> {
        other.slot_len.check_commensurate(self.slot_len)?;
        let store_len = self.slot_len;
        for s in other.iter() {
            let dst = self.series_mut(s.id);
            for k in s.flagged() {
                let (lo, hi) = map_slot(k, other.slot_len, store_len);
                dst.slots.extend(lo..=hi);
            }
        }
        Ok(())
    }

    /// Set of `(series, slot)` pairs whose slot starts at or after `from`.
    pub fn flagged_since(&self, from: SimTime) -> BTreeSet<(SeriesId, u64)> {
        let first = from.as_millis().div_ceil(self.slot_len.0);
        self.series
            .values()
            .flat_map(|s| s.flagged_from(first).map(move |k| (s.id, k)))
            .collect()
    }

    /// Debug dump, one `node,source,target,slot_index,slot_len` line per flagged slot.
    pub fn dump(&self, node: NodeId) -> String {
        let mut out = String::new();
        let len = format_secs(self.slot_len.0);
        for s in self.series.values() {
            for k in s.flagged() {
                let _ = writeln!(out, "{node},{},{},{k},{len}", s.id.source, s.id.target);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::ServiceId;
    use proptest::prelude::*;

    fn len(ms: u64) -> SlotLen {
        SlotLen::from_millis(ms).unwrap()
    }

    fn sid(a: u32, b: u16) -> SeriesId {
        SeriesId::new(
            Endpoint::Client(NodeId(a)),
            Endpoint::Service { service: ServiceId(b), host: NodeId(a + 1) },
        )
        .unwrap()
    }

    #[test]
    fn record_occurrence_slots() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(300));
        let id = sid(1, 2);
        st.record_occurrence(id, SimTime::from_secs_f64(12.34));
        assert!(st.is_flagged(&id, 123));
        assert_eq!(st.flagged_slot_count(), 1);

        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(300));
        st.record_occurrence(id, SimTime::from_secs_f64(0.01));
        st.record_occurrence(id, SimTime::from_secs_f64(0.09));
        assert_eq!(st.get(&id).unwrap().flagged().collect::<Vec<_>>(), vec![0]);

        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(300));
        st.record_occurrence(id, SimTime::ZERO);
        assert!(st.is_flagged(&id, 0));
    }

    #[test]
    fn self_dependence_rejected() {
        let e = Endpoint::Client(NodeId(3));
        assert_eq!(SeriesId::new(e, e), Err(TimeSeriesError::SelfDependence(e)));
        assert_eq!(SlotLen::from_millis(0), Err(TimeSeriesError::ZeroSlotLen));
    }

    #[test]
    fn prune_examples() {
        let id = sid(1, 2);
        let mut st = TimeSeriesStore::new(len(1000), SimTime::from_secs(300));
        for k in [50, 150, 350] {
            st.get_or_flag(id, k);
        }
        let before = st.clone();
        st.prune(SimTime::ZERO);
        assert_eq!(st, before);
        st.prune(SimTime::from_secs(400));
        assert_eq!(st.get(&id).unwrap().flagged().collect::<Vec<_>>(), vec![150, 350]);

        let mut empty = TimeSeriesStore::new(len(1000), SimTime::from_secs(300));
        empty.prune(SimTime::from_secs(1000));
        assert_eq!(empty.series_count(), 0);

        // series survive pruning even when all their slots go
        st.prune(SimTime::from_secs(10_000));
        assert_eq!(st.series_count(), 1);
        assert!(st.is_empty());
    }

    impl TimeSeriesStore {
        fn get_or_flag(&mut self, id: SeriesId, slot: u64) {
            self.series_mut(id).flag(slot);
        }
    }

    #[test]
    fn resample_examples() {
        let id = sid(0, 0);
        let s = TimeSeries::from_flags(id, len(100), &[true, false, false, true]);
        assert_eq!(s.resample(len(100)).unwrap(), s);
        let agg = s.resample(len(200)).unwrap();
        assert_eq!(agg.flagged().collect::<Vec<_>>(), vec![0, 1]);

        let split = TimeSeries::from_flags(id, len(200), &[false, true]).resample(len(100)).unwrap();
        assert_eq!(split.flagged().collect::<Vec<_>>(), vec![2, 3]);

        assert_eq!(s.resample(len(250)).unwrap_err(), TimeSeriesError::NonCommensurate(100, 250));
    }

    #[test]
    fn resample_hundred_to_one_matches_window_fold() {
        // oracle: explicit OR over each 100-slot window of a dense flag vector
        let id = sid(0, 0);
        let mut flags = vec![false; 300];
        flags[137] = true;
        let s = TimeSeries::from_flags(id, len(100), &flags);
        let expected: Vec<u64> = flags
            .chunks(100)
            .enumerate()
            .filter(|(_, w)| w.iter().fold(false, |a, &b| a | b))
            .map(|(i, _)| i as u64)
            .collect();
        let got: Vec<u64> = s.resample(len(10_000)).unwrap().flagged().collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![1]);
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let runs = vec![
            SlotRun { id: sid(1, 1), first_slot: 4, flags: vec![true, false, true] },
            SlotRun { id: sid(2, 1), first_slot: 9, flags: vec![true] },
        ];
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        st.merge_runs(len(100), &runs).unwrap();
        assert_eq!(
            st.flagged_since(SimTime::ZERO),
            [(sid(1, 1), 4), (sid(1, 1), 6), (sid(2, 1), 9)].into_iter().collect()
        );
        let once = st.clone();
        st.merge_runs(len(100), &runs).unwrap();
        assert_eq!(st, once);
    }

    #[test]
    fn merge_two_datasets_all_orderings() {
        // enumerate every pair of 8-slot flag patterns on overlapping ranges
        let id = sid(0, 0);
        for a in 0u32..256 {
            for b in (0u32..256).step_by(7) {
                let run = |bits: u32, first: u64| SlotRun {
                    id,
                    first_slot: first,
                    flags: (0..8).map(|i| bits >> i & 1 == 1).collect(),
                };
                let (ra, rb) = (run(a, 0), run(b, 3));
                let mut ab = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
                ab.merge_runs(len(100), [&ra, &rb]).unwrap();
                let mut ba = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
                ba.merge_runs(len(100), [&rb, &ra]).unwrap();
                assert_eq!(ab, ba);
            }
        }
    }

    #[test]
    fn merge_rejects_non_commensurate() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        let r = SlotRun { id: sid(0, 0), first_slot: 0, flags: vec![true] };
        assert!(st.merge_runs(len(250), [&r]).is_err());
    }

    #[test]
    fn merge_coarse_run_splits_into_store_resolution() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        let r = SlotRun { id: sid(0, 0), first_slot: 2, flags: vec![true] };
        st.merge_runs(len(1000), [&r]).unwrap();
        assert_eq!(st.get(&sid(0, 0)).unwrap().flagged().collect::<Vec<_>>(), (20..30).collect::<Vec<_>>());
    }

    #[test]
    fn window_query_and_source_range() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        let a = sid(1, 1);
        let b = sid(1, 2);
        let c = sid(2, 1);
        st.record_occurrence(a, SimTime(1_050));
        st.record_occurrence(b, SimTime(5_000));
        st.record_occurrence(c, SimTime(1_000));
        let s = st.get(&a).unwrap();
        assert!(s.flagged_within(SimTime(1_099), SimTime(2_000)));
        assert!(!s.flagged_within(SimTime(1_100), SimTime(2_000)));
        let from1: Vec<_> = st.series_from(Endpoint::Client(NodeId(1))).map(|s| s.id()).collect();
        assert_eq!(from1, vec![a, b]);
    }

    #[test]
    fn dump_format() {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        st.record_occurrence(sid(1, 2), SimTime(1_000));
        assert_eq!(st.dump(NodeId(5)), "5,c1,s2@2,10,0.1\n");
    }

    fn arb_flags(max: usize) -> impl Strategy<Value = Vec<bool>> {
        prop::collection::vec(any::<bool>(), 0..max)
    }

    fn arb_run() -> impl Strategy<Value = SlotRun> {
        (0u32..3, 0u64..20, arb_flags(16)).prop_map(|(s, first, flags)| SlotRun {
            id: sid(s, 0),
            first_slot: first,
            flags,
        })
    }

    fn merged(runs: &[&SlotRun]) -> TimeSeriesStore {
        let mut st = TimeSeriesStore::new(len(100), SimTime::from_secs(60));
        for r in runs {
            st.merge_runs(len(100), [*r]).unwrap();
        }
        st
    }

    proptest! {
        #[test]
        fn record_then_query(t in 0u64..10_000_000, l in 1u64..5_000) {
            let mut st = TimeSeriesStore::new(len(l), SimTime::from_secs(60));
            st.record_occurrence(sid(0, 0), SimTime(t));
            prop_assert!(st.is_flagged(&sid(0, 0), t / l));
        }

        #[test]
        fn aggregation_equals_or_oracle(flags in arb_flags(1000), ratio in prop::sample::select(vec![2u64, 5, 10, 100])) {
            let s = TimeSeries::from_flags(sid(0, 0), len(100), &flags);
            let agg = s.resample(len(100 * ratio)).unwrap();
            let oracle: Vec<u64> = flags
                .chunks(ratio as usize)
                .enumerate()
                .filter(|(_, w)| w.iter().any(|&f| f))
                .map(|(i, _)| i as u64)
                .collect();
            prop_assert_eq!(agg.flagged().collect::<Vec<_>>(), oracle);
        }

        #[test]
        fn split_then_aggregate_round_trips(flags in arb_flags(200), ratio in 1u64..20) {
            let s = TimeSeries::from_flags(sid(0, 0), len(100 * ratio), &flags);
            let back = s.resample(len(100)).unwrap().resample(len(100 * ratio)).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn merge_is_a_lattice_join(a in arb_run(), b in arb_run(), c in arb_run()) {
            prop_assert_eq!(merged(&[&a, &b]), merged(&[&b, &a]));
            prop_assert_eq!(merged(&[&a, &a]), merged(&[&a]));
            let mut left = merged(&[&a, &b]);
            left.merge_store(&merged(&[&c])).unwrap();
            let mut right = merged(&[&a]);
            right.merge_store(&merged(&[&b, &c])).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn prune_lower_bound(slots in prop::collection::btree_set(0u64..10_000, 0..50), now in 0u64..2_000_000) {
            let l = 100;
            let retention = SimTime::from_secs(300);
            let mut st = TimeSeriesStore::new(len(l), retention);
            for k in &slots {
                st.get_or_flag(sid(0, 0), *k);
            }
            st.prune(SimTime(now));
            if let Some(min) = st.get(&sid(0, 0)).and_then(|s| s.flagged().next()) {
                prop_assert!(min * l + l + retention.as_millis() >= now);
            }
        }
    }
}
