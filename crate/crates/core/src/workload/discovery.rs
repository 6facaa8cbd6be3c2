use std::collections::{BTreeSet, VecDeque};

use crate::ids::{Endpoint, NodeId};
use crate::time::SimTime;
use crate::timeseries::{SeriesId, TimeSeriesStore};

/// Dependencies discovered for one client over one time window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceGraph {
    pub root: Endpoint,
    pub start: SimTime,
    pub end: SimTime,
    pub edges: BTreeSet<SeriesId>,
}

/// Transitive closure from `root`: `expand(e)` yields the series leaving `e`
/// that count as active; their targets are expanded in turn.
pub fn closure(root: Endpoint, mut expand: impl FnMut(Endpoint) -> Vec<SeriesId>) -> BTreeSet<SeriesId> {
    let mut edges = BTreeSet::new();
    let mut seen = BTreeSet::from([root]);
    let mut frontier = VecDeque::from([root]);
    while let Some(e) = frontier.pop_front() {
        for id in expand(e) {
            edges.insert(id);
            if seen.insert(id.target) {
                frontier.push_back(id.target);
            }
        }
    }
    edges
}

/// Series leaving `source` with a flagged slot overlapping `[start, end]`.
pub fn active_from(store: &TimeSeriesStore, source: Endpoint, start: SimTime, end: SimTime) -> Vec<SeriesId> {
    store.series_from(source).filter(|s| s.flagged_within(start, end)).map(|s| s.id()).collect()
}

/// Builds the dependence graph of `client` over `[start, end]` from one
/// local store, without consulting any other node.
pub fn discover_dg(store: &TimeSeriesStore, client: NodeId, start: SimTime, end: SimTime) -> DependenceGraph {
    let root = Endpoint::Client(client);
    let edges = closure(root, |e| active_from(store, e, start, end));
    DependenceGraph { root, start, end, edges }
}

/// `|D ∩ GT| / |GT|`; undefined for an empty ground truth.
pub fn tp_ratio(discovered: &BTreeSet<SeriesId>, truth: &BTreeSet<SeriesId>) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    Some(discovered.intersection(truth).count() as f64 / truth.len() as f64)
}

/// `|D − GT| / |D|`; undefined for an empty discovery.
pub fn fp_ratio(discovered: &BTreeSet<SeriesId>, truth: &BTreeSet<SeriesId>) -> Option<f64> {
    if discovered.is_empty() {
        return None;
    }
    Some(discovered.difference(truth).count() as f64 / discovered.len() as f64)
}
