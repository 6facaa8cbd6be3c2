use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use crate::harness::{Ctx, Method, ScenarioConfig, TraceEvent};
use crate::ids::{Endpoint, NodeId};
use crate::protocol::TransferDataset;
use crate::sim::topology::components;
use crate::sim::Delivery;
use crate::time::SimTime;
use crate::timeseries::{SeriesId, TimeSeriesStore};
use crate::workload::{active_from, closure};

use super::cache::{AccessTable, ReplicaCache};
use super::{monitors, series_dataset, series_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DafnEvent {
    Prune,
}

/// What `holder` can return for `id` when asked for `[start, end]` at
/// `now`: its own monitor data from `start` onward, or a covering replica.
pub(crate) fn holder_data(
    stores: &[TimeSeriesStore],
    caches: &[ReplicaCache],
    holder: NodeId,
    id: SeriesId,
    start: SimTime,
    end: SimTime,
    now: SimTime,
) -> Option<(TransferDataset, (SimTime, SimTime))> {
    let store = &stores[holder.idx()];
    if monitors(holder, &id) {
        return Some((series_dataset(store.get(&id), store.slot_len(), start, now), (start, now)));
    }
    let entry = caches[holder.idx()].get(&id).filter(|e| e.covers(start, end))?;
    let (lo, hi) = entry.covered;
    Some((series_dataset(Some(&entry.data), store.slot_len(), lo, hi), entry.covered))
}

/// Sends `ds` from `holder` to `requester` over `hops` links end to end.
pub(crate) fn respond<E>(ctx: &mut Ctx<'_, E>, holder: NodeId, requester: NodeId, hops: u32, ds: &TransferDataset) -> bool {
    let now = ctx.now;
    let bytes = ctx.sizes.dataset_bytes(ds);
    let (series, slots) = (ds.series_count(), ds.slot_count());
    ctx.meter.log(now, TraceEvent::Send, holder, requester, bytes, series, slots);
    let p = ctx.world.link().path_prob(hops, 0);
    if hops == 0 || ctx.loss.gen::<f64>() < p {
        ctx.meter.log(now, TraceEvent::Recv, holder, requester, bytes, series, slots);
        true
    } else {
        ctx.meter.log(now, TraceEvent::Lost, holder, requester, bytes, series, slots);
        false
    }
}

/// Flooding lookup with cooperative caching. Requests for one series spread
/// hop by hop, every node forwarding each request once; nodes holding the
/// series stop the flood, the nearest answers and the requester caches it. A
/// coordinator per connected component (its lowest node id) periodically
/// removes duplicate replicas held by neighbours, keeping the one accessed
/// more often.
#[derive(Debug, Clone)]
pub struct Dafn {
    caches: Vec<ReplicaCache>,
    access: Vec<AccessTable>,
    prune_period: SimTime,
    removed: usize,
}

impl Dafn {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let slot = cfg.monitor_slot().expect("validated");
        let retention = SimTime::from_secs_f64(cfg.retention_s);
        let window = SimTime::from_secs_f64(cfg.baselines.dafn_frequency_window_s);
        Dafn {
            caches: vec![ReplicaCache::new(slot, retention); cfg.nodes],
            access: vec![AccessTable::new(window); cfg.nodes],
            prune_period: SimTime::from_secs_f64(cfg.baselines.dafn_prune_period_s),
            removed: 0,
        }
    }

    pub fn caches(&self) -> &[ReplicaCache] {
        &self.caches
    }

    /// Replicas removed by coordinators so far.
    pub fn removed_replicas(&self) -> usize {
        self.removed
    }

    fn holds(&self, node: NodeId, id: &SeriesId, start: SimTime, end: SimTime) -> bool {
        monitors(node, id) || self.caches[node.idx()].covers(id, start, end)
    }

    /// Floods a request for `id` from `r`; the first holder reached answers.
    /// Returns whether the answer arrived and shows activity in the window.
    pub(crate) fn lookup(&mut self, ctx: &mut Ctx<'_, DafnEvent>, r: NodeId, id: SeriesId, start: SimTime, end: SimTime) -> bool {
        let now = ctx.now;
        let n = ctx.node_count();
        let p = ctx.world.link().link_prob(0);
        let req = ctx.sizes.request_bytes(1);
        let mut dist: Vec<Option<u32>> = vec![None; n];
        dist[r.idx()] = Some(0);
        let mut q = VecDeque::from([r]);
        let mut first = None;
        while let Some(u) = q.pop_front() {
            ctx.meter.log(now, TraceEvent::Send, u, u, req, 1, 0);
            let du = dist[u.idx()].expect("queued nodes have a distance");
            for &v in ctx.world.adjacency().neighbors(u) {
                if ctx.loss.gen::<f64>() >= p {
                    ctx.meter.log(now, TraceEvent::Lost, u, v, req, 1, 0);
                    continue;
                }
                ctx.meter.log(now, TraceEvent::Recv, u, v, req, 1, 0);
                if dist[v.idx()].is_some() {
                    continue;
                }
                dist[v.idx()] = Some(du + 1);
                if self.holds(v, &id, start, end) {
                    first.get_or_insert(v);
                } else {
                    q.push_back(v);
                }
            }
        }
        let Some(h) = first else { return false };
        let Some((ds, covered)) = holder_data(ctx.stores, &self.caches, h, id, start, end, now) else { return false };
        self.access[h.idx()].record(id, now);
        if !respond(ctx, h, r, dist[h.idx()].expect("reached"), &ds) {
            return false;
        }
        self.caches[r.idx()].insert(id, &ds, covered);
        self.caches[r.idx()].get(&id).is_some_and(|e| e.active(start, end))
    }

    fn prune_replicas(&mut self, ctx: &mut Ctx<'_, DafnEvent>) {
        let now = ctx.now;
        for comp in components(ctx.world.adjacency()) {
            if comp.len() < 2 {
                continue;
            }
            let coord = comp[0];
            // tables reaching the coordinator
            let mut known: BTreeSet<NodeId> = BTreeSet::from([coord]);
            for &m in &comp[1..] {
                let k = self.caches[m.idx()].len();
                if k == 0 {
                    continue;
                }
                let bytes = ctx.sizes.request_bytes(k);
                ctx.meter.log(now, TraceEvent::Send, m, coord, bytes, k, 0);
                match ctx.world.send(now, m, coord, 0, ctx.loss) {
                    Delivery::Delivered { .. } => {
                        ctx.meter.log(now, TraceEvent::Recv, m, coord, bytes, k, 0);
                        known.insert(m);
                    }
                    Delivery::Lost { .. } => ctx.meter.log(now, TraceEvent::Lost, m, coord, bytes, k, 0),
                }
            }
            let mut drop: BTreeMap<NodeId, BTreeSet<SeriesId>> = BTreeMap::new();
            for &u in &known {
                for &v in ctx.world.adjacency().neighbors(u) {
                    if v <= u || !known.contains(&v) {
                        continue;
                    }
                    for s in self.caches[u.idx()].ids() {
                        if self.caches[v.idx()].get(&s).is_none() {
                            continue;
                        }
                        let (fu, fv) = (self.access[u.idx()].frequency(&s, now), self.access[v.idx()].frequency(&s, now));
                        // ties keep the lower id
                        let loser = if fu >= fv { v } else { u };
                        drop.entry(loser).or_default().insert(s);
                    }
                }
            }
            for (x, sources) in drop {
                if x != coord {
                    let bytes = ctx.sizes.request_bytes(sources.len());
                    ctx.meter.log(now, TraceEvent::Send, coord, x, bytes, sources.len(), 0);
                    match ctx.world.send(now, coord, x, 0, ctx.loss) {
                        Delivery::Delivered { .. } => ctx.meter.log(now, TraceEvent::Recv, coord, x, bytes, sources.len(), 0),
                        Delivery::Lost { .. } => {
                            ctx.meter.log(now, TraceEvent::Lost, coord, x, bytes, sources.len(), 0);
                            continue;
                        }
                    }
                }
                for s in sources {
                    if self.caches[x.idx()].remove(&s) {
                        self.removed += 1;
                    }
                }
            }
        }
    }

    fn fetch(&mut self, ctx: &mut Ctx<'_, DafnEvent>, client: NodeId, id: SeriesId, start: SimTime, end: SimTime) -> bool {
        self.access[client.idx()].record(id, ctx.now);
        match self.caches[client.idx()].get(&id).filter(|c| c.covers(start, end)) {
            Some(entry) => entry.active(start, end),
            None => self.lookup(ctx, client, id, start, end),
        }
    }
}

impl Method for Dafn {
    type Event = DafnEvent;

    fn name(&self) -> &'static str {
        "dafn"
    }

    fn init(&mut self, ctx: &mut Ctx<'_, DafnEvent>) {
        ctx.schedule(ctx.now + self.prune_period, DafnEvent::Prune);
    }

    fn on_event(&mut self, ev: DafnEvent, ctx: &mut Ctx<'_, DafnEvent>) {
        match ev {
            DafnEvent::Prune => {
                self.prune_replicas(ctx);
                ctx.schedule(ctx.now + self.prune_period, DafnEvent::Prune);
            }
        }
    }

    fn analyze(&mut self, client: NodeId, start: SimTime, end: SimTime, ctx: &mut Ctx<'_, DafnEvent>) -> BTreeSet<SeriesId> {
        closure(Endpoint::Client(client), |e| {
            let mut ids = active_from(&ctx.stores[client.idx()], e, start, end);
            for id in series_index(ctx.stores, e) {
                if !monitors(client, &id) && self.fetch(ctx, client, id, start, end) {
                    ids.push(id);
                }
            }
            ids
        })
    }

    fn on_prune(&mut self, ctx: &mut Ctx<'_, DafnEvent>) {
        for c in &mut self.caches {
            c.prune(ctx.now);
        }
        for a in &mut self.access {
            a.expire(ctx.now);
        }
    }
}
