#![allow(dead_code)]

use rand::Rng;
use tsharvest::harness::{Bench, Gossip, GossipEvent, GossipMode};
use tsharvest::ids::{Endpoint, NodeId, ServiceId};
use tsharvest::protocol::ProtocolConfig;
use tsharvest::rng::{stream, Stream};
use tsharvest::sim::{HopTable, LinkModel, Mobility, Position, World, DEFAULT_TICK};
use tsharvest::time::SimTime;
use tsharvest::timeseries::{SeriesId, SlotLen, TimeSeriesStore};

pub const AGING: SimTime = SimTime::from_secs(600);

pub fn lossless() -> LinkModel {
    LinkModel { radio_range_m: 200.0, per_link_delivery_prob: 1.0, ..LinkModel::default() }
}

/// A connected static world of `n` nodes placed at random in a square.
pub fn static_connected(n: usize, seed: u64) -> World {
    let mut rng = stream(seed, Stream::Mobility);
    let side = 120.0 * (n as f64).sqrt();
    loop {
        let pos: Vec<Position> = (0..n).map(|_| Position::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side)).collect();
        let world = World::new(Mobility::fixed(pos), lossless(), DEFAULT_TICK, stream(seed, Stream::Mobility));
        if world.hops().row(NodeId(0)).iter().all(Option::is_some) {
            return world;
        }
    }
}

pub fn diameter(world: &World) -> u32 {
    HopTable::compute(world.adjacency()).diameter()
}

/// Every node records a few occurrences of series towards random others
/// during the first 20 s.
pub fn seeded_stores(n: usize, seed: u64) -> Vec<TimeSeriesStore> {
    let mut rng = stream(seed, Stream::Workload);
    let slot = SlotLen::from_millis(100).unwrap();
    let mut stores = vec![TimeSeriesStore::new(slot, SimTime::from_secs(100_000)); n];
    for (i, store) in stores.iter_mut().enumerate() {
        for k in 0..6u16 {
            let other = (i + 1 + rng.gen_range(0..n - 1)) % n;
            let id = SeriesId::new(
                Endpoint::Service { service: ServiceId(k), host: NodeId::from(i) },
                Endpoint::Service { service: ServiceId(k + 100), host: NodeId::from(other) },
            )
            .unwrap();
            for _ in 0..4 {
                store.record_occurrence(id, SimTime::from_millis(rng.gen_range(0..20_000)));
            }
        }
    }
    stores
}

pub fn union(stores: &[TimeSeriesStore]) -> TimeSeriesStore {
    let mut all = TimeSeriesStore::new(stores[0].slot_len(), stores[0].retention());
    for s in stores {
        all.merge_store(s).unwrap();
    }
    all
}

/// Runs `cycles` one-peer gossip cycles of 1 s after the seeding period and
/// returns the final stores with the end time.
pub fn gossip_static(mode: GossipMode, world: World, stores: Vec<TimeSeriesStore>, cycles: u64, seed: u64) -> (Vec<TimeSeriesStore>, SimTime) {
    let n = stores.len();
    let cfg = ProtocolConfig {
        cycle_period: SimTime::from_secs(1),
        confirm_timeout: SimTime::from_secs(1),
        aging_limit: AGING,
        ..ProtocolConfig::default()
    };
    let mut g = Gossip::new(mode, cfg, n, true).unwrap();
    let mut b = Bench::<GossipEvent>::new(world, stores, seed, false);
    b.run_until(&mut g, SimTime::from_secs(20));
    b.init(&mut g);
    let end = SimTime::from_secs(21 + cycles);
    b.run_until(&mut g, end);
    (b.stores, end)
}
