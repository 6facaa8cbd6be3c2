use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;

use crate::harness::{Ctx, Method, ScenarioConfig, TraceEvent};
use crate::ids::{Endpoint, NodeId};
use crate::time::SimTime;
use crate::timeseries::SeriesId;
use crate::workload::{active_from, closure};

use super::cache::ReplicaCache;
use super::cds::{dominators, greedy_cds};
use super::dafn::{holder_data, respond};
use super::{monitors, series_dataset, series_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarEvent {
    Push,
}

/// Active push replication of one series toward one requester.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    /// The monitor that saw the requests and pushes.
    pub host: NodeId,
    /// Start of the replicated range.
    pub from: SimTime,
}

/// Lookups relayed over a virtual backbone (a connected dominating set,
/// rebuilt every tick) plus reactive push replication: once a requester has
/// asked a monitor for a series often enough within the harvest delay and is
/// far enough away, the monitor keeps pushing new slots to the requester's
/// backbone node.
#[derive(Debug, Clone)]
pub struct Scalar {
    caches: Vec<ReplicaCache>,
    backbone: Vec<bool>,
    dominator: Vec<Option<NodeId>>,
    /// Per (series, requester): request times seen by answering monitors.
    requests: BTreeMap<(SeriesId, NodeId), VecDeque<SimTime>>,
    subs: BTreeMap<(SeriesId, NodeId), Subscription>,
    window: SimTime,
    min_requests: usize,
    min_hops: u32,
    push_period: SimTime,
    pushes: usize,
}

impl Scalar {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let slot = cfg.monitor_slot().expect("validated");
        let retention = SimTime::from_secs_f64(cfg.retention_s);
        Scalar {
            caches: vec![ReplicaCache::new(slot, retention); cfg.nodes],
            backbone: vec![true; cfg.nodes],
            dominator: (0..cfg.nodes).map(|i| Some(NodeId::from(i))).collect(),
            requests: BTreeMap::new(),
            subs: BTreeMap::new(),
            window: cfg.harvest_delay(),
            min_requests: cfg.baselines.scalar_min_requests,
            min_hops: cfg.baselines.scalar_min_hops,
            push_period: SimTime::from_secs_f64(cfg.baselines.scalar_push_period_s),
            pushes: 0,
        }
    }

    pub fn backbone(&self) -> &[bool] {
        &self.backbone
    }

    pub fn caches(&self) -> &[ReplicaCache] {
        &self.caches
    }

    pub fn subscriptions(&self) -> &BTreeMap<(SeriesId, NodeId), Subscription> {
        &self.subs
    }

    /// Delivered push messages so far.
    pub fn pushes(&self) -> usize {
        self.pushes
    }

    fn rebuild(&mut self, ctx: &Ctx<'_, ScalarEvent>) {
        let adj = ctx.world.adjacency();
        self.backbone = greedy_cds(adj);
        self.dominator = dominators(adj, &self.backbone);
    }

    fn holds(&self, node: NodeId, id: &SeriesId, start: SimTime, end: SimTime) -> bool {
        monitors(node, id) || self.caches[node.idx()].covers(id, start, end)
    }

    fn note_request(&mut self, id: SeriesId, host: NodeId, requester: NodeId, now: SimTime, hops: u32) {
        let log = self.requests.entry((id, requester)).or_default();
        log.push_back(now);
        let floor = now.saturating_sub(self.window);
        while log.front().is_some_and(|&t| t < floor) {
            log.pop_front();
        }
        if log.len() >= self.min_requests && hops >= self.min_hops {
            self.subs.entry((id, requester)).or_insert(Subscription { host, from: floor });
        }
    }

    /// Request from `r` to its backbone node, flooded over the backbone.
    /// Backbone nodes answer for themselves or a dominated neighbour.
    /// Returns whether the answer arrived and shows activity in the window.
    pub(crate) fn lookup(&mut self, ctx: &mut Ctx<'_, ScalarEvent>, r: NodeId, id: SeriesId, start: SimTime, end: SimTime) -> bool {
        let now = ctx.now;
        let p = ctx.world.link().link_prob(0);
        let req = ctx.sizes.request_bytes(1);
        let Some(entry) = self.dominator[r.idx()] else { return false };
        let n = ctx.node_count();
        let mut dist: Vec<Option<u32>> = vec![None; n];
        if entry != r {
            ctx.meter.log(now, TraceEvent::Send, r, entry, req, 1, 0);
            if ctx.loss.gen::<f64>() >= p {
                ctx.meter.log(now, TraceEvent::Lost, r, entry, req, 1, 0);
                return false;
            }
            ctx.meter.log(now, TraceEvent::Recv, r, entry, req, 1, 0);
        }
        dist[entry.idx()] = Some(u32::from(entry != r));
        let mut q = VecDeque::from([entry]);
        let mut first = None;
        while let Some(b) = q.pop_front() {
            let local = std::iter::once(b)
                .chain(ctx.world.adjacency().neighbors(b).iter().copied().filter(|v| !self.backbone[v.idx()]))
                .find(|&h| h != r && self.holds(h, &id, start, end));
            if let Some(h) = local {
                first.get_or_insert(h);
                continue;
            }
            ctx.meter.log(now, TraceEvent::Send, b, b, req, 1, 0);
            let db = dist[b.idx()].expect("queued");
            for &v in ctx.world.adjacency().neighbors(b) {
                if !self.backbone[v.idx()] {
                    continue;
                }
                if ctx.loss.gen::<f64>() >= p {
                    ctx.meter.log(now, TraceEvent::Lost, b, v, req, 1, 0);
                    continue;
                }
                ctx.meter.log(now, TraceEvent::Recv, b, v, req, 1, 0);
                if dist[v.idx()].is_none() {
                    dist[v.idx()] = Some(db + 1);
                    q.push_back(v);
                }
            }
        }
        let Some(h) = first else { return false };
        let Some((ds, covered)) = holder_data(ctx.stores, &self.caches, h, id, start, end, now) else { return false };
        let Some(hops) = ctx.world.hops().get(h, r) else { return false };
        if monitors(h, &id) {
            self.note_request(id, h, r, now, hops);
        }
        if !respond(ctx, h, r, hops, &ds) {
            return false;
        }
        self.caches[r.idx()].insert(id, &ds, covered);
        self.caches[r.idx()].get(&id).is_some_and(|e| e.active(start, end))
    }

    fn push(&mut self, ctx: &mut Ctx<'_, ScalarEvent>) {
        let now = ctx.now;
        let floor = now.saturating_sub(self.window);
        let keys: Vec<(SeriesId, NodeId)> = self.subs.keys().copied().collect();
        for key in keys {
            let (id, requester) = key;
            let active = self.requests.get(&key).map_or(0, |log| log.iter().filter(|&&t| t >= floor).count());
            if active < self.min_requests {
                self.subs.remove(&key);
                continue;
            }
            let host = self.subs[&key].host;
            let Some(target) = self.dominator[requester.idx()].filter(|&t| !monitors(t, &id)) else { continue };
            let Some(hops) = ctx.world.hops().get(host, target) else { continue };
            let from = self.subs[&key].from.max(floor);
            let lo = match self.caches[target.idx()].get(&id) {
                Some(e) if e.covered.0 <= from && e.covered.1 >= from => e.covered.1,
                _ => from,
            };
            let store = &ctx.stores[host.idx()];
            let ds = series_dataset(store.get(&id), store.slot_len(), lo, now);
            if ds.is_empty() && lo != from {
                continue;
            }
            if respond(ctx, host, target, hops, &ds) {
                self.caches[target.idx()].insert(id, &ds, (lo, now));
                self.pushes += 1;
            }
        }
    }

    fn fetch(&mut self, ctx: &mut Ctx<'_, ScalarEvent>, client: NodeId, id: SeriesId, start: SimTime, end: SimTime) -> bool {
        match self.caches[client.idx()].get(&id).filter(|c| c.covers(start, end)) {
            Some(entry) => entry.active(start, end),
            None => self.lookup(ctx, client, id, start, end),
        }
    }
}

impl Method for Scalar {
    type Event = ScalarEvent;

    fn name(&self) -> &'static str {
        "scalar"
    }

    fn init(&mut self, ctx: &mut Ctx<'_, ScalarEvent>) {
        self.rebuild(ctx);
        ctx.schedule(ctx.now + self.push_period, ScalarEvent::Push);
    }

    fn on_tick(&mut self, ctx: &mut Ctx<'_, ScalarEvent>) {
        self.rebuild(ctx);
    }

    fn on_event(&mut self, ev: ScalarEvent, ctx: &mut Ctx<'_, ScalarEvent>) {
        match ev {
            ScalarEvent::Push => {
                self.push(ctx);
                ctx.schedule(ctx.now + self.push_period, ScalarEvent::Push);
            }
        }
    }

    fn analyze(&mut self, client: NodeId, start: SimTime, end: SimTime, ctx: &mut Ctx<'_, ScalarEvent>) -> BTreeSet<SeriesId> {
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

    fn on_prune(&mut self, ctx: &mut Ctx<'_, ScalarEvent>) {
        for c in &mut self.caches {
            c.prune(ctx.now);
        }
        let floor = ctx.now.saturating_sub(self.window);
        self.requests.retain(|_, log| {
            while log.front().is_some_and(|&t| t < floor) {
                log.pop_front();
            }
            !log.is_empty()
        });
    }
}
