//! Comparison harvesting methods: direct pulls from monitors (DHT), flooding
//! with cooperative caching (DAFN), and backbone lookups with push
//! replication (SCALAR). All share the runner, stores and byte accounting of
//! the gossip methods.

mod cache;
mod cds;
mod dafn;
mod dht;
mod scalar;

use crate::ids::{Endpoint, NodeId};
use crate::protocol::{DatasetEntry, TransferDataset};
use crate::time::SimTime;
use crate::timeseries::{SeriesId, SlotLen, SlotRun, TimeSeries, TimeSeriesStore};

pub use cache::{AccessTable, CacheEntry, ReplicaCache};
pub use cds::{dominators, greedy_cds, is_connected_dominating, is_dominating};
pub use dafn::Dafn;
pub use dht::Dht;
pub use scalar::Scalar;

fn entry(s: &TimeSeries, from: SimTime, to: SimTime) -> Option<DatasetEntry> {
    let len = s.slot_len();
    let (lo, hi) = (len.slot_of(from), len.slot_of(to));
    let slots: Vec<u64> = s.flagged_from(lo).take_while(|&k| k <= hi).collect();
    let (&first, &last) = (slots.first()?, slots.last()?);
    let mut flags = vec![false; (last - first + 1) as usize];
    for k in slots {
        flags[(k - first) as usize] = true;
    }
    Some(DatasetEntry { run: SlotRun { id: s.id(), first_slot: first, flags }, newest_slot_timestamp: len.start_of(last) })
}

/// Slots of every series leaving `source` whose slot range overlaps
/// `[from, to]`, at the store's resolution.
pub fn window_dataset(store: &TimeSeriesStore, source: Endpoint, from: SimTime, to: SimTime) -> TransferDataset {
    let entries = store.series_from(source).filter_map(|s| entry(s, from, to)).collect();
    TransferDataset::new(store.slot_len(), entries)
}

/// Slots of one series overlapping `[from, to]`; empty if none.
pub fn series_dataset(series: Option<&TimeSeries>, slot_len: SlotLen, from: SimTime, to: SimTime) -> TransferDataset {
    TransferDataset::new(slot_len, series.and_then(|s| entry(s, from, to)).into_iter().collect())
}

/// The globally known series index: every series leaving `source`, as
/// registered at the source's host.
pub fn series_index(stores: &[TimeSeriesStore], source: Endpoint) -> Vec<SeriesId> {
    stores[source.host().idx()].series_from(source).map(|s| s.id()).collect()
}

/// Both endpoints' monitors record every occurrence, so a node hosting
/// either end already holds the complete series.
pub fn monitors(node: NodeId, id: &SeriesId) -> bool {
    id.source.host() == node || id.target.host() == node
}

#[cfg(test)]
pub(crate) mod fixture {
    use super::*;
    use crate::harness::{Bench, ScenarioConfig};
    use crate::ids::ServiceId;
    use crate::rng::{stream, Stream};
    use crate::sim::{LinkModel, Mobility, Position, World, DEFAULT_TICK};

    /// `n` nodes on a line 150 m apart, lossless links reaching one neighbour
    /// on each side.
    pub fn line<E>(n: usize) -> Bench<E> {
        let pos = (0..n).map(|i| Position::new(150.0 * i as f64, 0.0)).collect();
        let link = LinkModel { radio_range_m: 200.0, per_link_delivery_prob: 1.0, ..LinkModel::default() };
        let world = World::new(Mobility::fixed(pos), link, DEFAULT_TICK, stream(7, Stream::Mobility));
        let stores = vec![TimeSeriesStore::new(SlotLen::from_millis(100).unwrap(), SimTime::from_secs(1200)); n];
        Bench::new(world, stores, 7, true)
    }

    pub fn config(n: usize) -> ScenarioConfig {
        ScenarioConfig { nodes: n, ..ScenarioConfig::military() }
    }

    /// A series between two services both hosted on `host`.
    pub fn local_series(host: usize) -> SeriesId {
        let h = NodeId::from(host);
        SeriesId::new(Endpoint::Service { service: ServiceId(1), host: h }, Endpoint::Service { service: ServiceId(2), host: h })
            .unwrap()
    }

    pub fn sends(trace: &str) -> Vec<(String, String)> {
        trace
            .lines()
            .skip(1)
            .filter_map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[1] == "send").then(|| (f[2].to_string(), f[3].to_string()))
            })
            .collect()
    }
}
