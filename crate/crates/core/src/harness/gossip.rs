use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::ids::NodeId;
use crate::protocol::{
    build_dataset, candidate_set, on_receive_dataset, select_peers, Confirmation, DatasetMessage, ProtocolConfig,
    ProtocolError, SyncAgent, TransferRecord,
};
use crate::sim::Delivery;
use crate::time::SimTime;
use crate::timeseries::SeriesId;
use crate::workload::discover_dg;

use super::meter::TraceEvent;
use super::method::{Ctx, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GossipMode {
    /// Per-peer increments with confirmations.
    Incremental,
    /// The whole age-bounded store every time, no confirmations.
    Naive,
}

#[derive(Debug, Clone)]
pub enum GossipEvent {
    Cycle(NodeId),
    DatasetArrive(DatasetMessage),
    ConfirmArrive(Confirmation),
    Timeout { node: NodeId, peer: NodeId, transfer_id: u64 },
}

/// Push gossip between synchronization agents; analysis reads only the
/// client's local store.
#[derive(Debug)]
pub struct Gossip {
    mode: GossipMode,
    cfg: ProtocolConfig,
    enabled: bool,
    agents: Vec<SyncAgent>,
    naive_ids: Vec<u64>,
    keep_records: bool,
    records: Vec<TransferRecord>,
    record_index: BTreeMap<(NodeId, u64), usize>,
}

impl Gossip {
    /// `enabled = false` models zero gossip cycles: agents exist but never run.
    pub fn new(mode: GossipMode, cfg: ProtocolConfig, nodes: usize, enabled: bool) -> Result<Self, ProtocolError> {
        let agents = (0..nodes).map(|i| SyncAgent::new(NodeId::from(i), cfg.clone())).collect::<Result<_, _>>()?;
        Ok(Gossip {
            mode,
            cfg,
            enabled,
            agents,
            naive_ids: vec![0; nodes],
            keep_records: false,
            records: Vec::new(),
            record_index: BTreeMap::new(),
        })
    }

    /// Keeps a record of every dataset sent, for auditing.
    pub fn keep_records(mut self, on: bool) -> Self {
        self.keep_records = on;
        self
    }

    pub fn records(&self) -> &[TransferRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<TransferRecord> {
        self.record_index.clear();
        std::mem::take(&mut self.records)
    }

    pub fn agents(&self) -> &[SyncAgent] {
        &self.agents
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    fn cycle(&mut self, n: NodeId, ctx: &mut Ctx<'_, GossipEvent>) {
        let now = ctx.now;
        let mut out: Vec<DatasetMessage> = Vec::new();
        match self.mode {
            GossipMode::Incremental => {
                let report = self.agents[n.idx()].run_cycle(now, &ctx.stores[n.idx()], ctx.world.hops(), ctx.proto, &mut out);
                for p in report.expired {
                    ctx.meter.log(now, TraceEvent::Timeout, n, p.peer, 0, 0, 0);
                }
            }
            GossipMode::Naive => {
                let candidates = candidate_set(ctx.world.hops(), n, self.cfg.max_hop_distance);
                for peer in select_peers(&candidates, self.cfg.max_peers, ctx.proto) {
                    let dataset = build_dataset(&ctx.stores[n.idx()], now, &self.cfg, |_| None);
                    if dataset.is_empty() {
                        continue;
                    }
                    let transfer_id = self.naive_ids[n.idx()];
                    self.naive_ids[n.idx()] += 1;
                    out.push(DatasetMessage { transfer_id, from: n, to: peer, sent_at: now, dataset });
                }
            }
        }
        let concurrent = out.len().saturating_sub(1);
        for msg in out {
            let bytes = ctx.sizes.dataset_bytes(&msg.dataset);
            let (series, slots) = (msg.dataset.series_count(), msg.dataset.slot_count());
            ctx.meter.log(now, TraceEvent::Send, msg.from, msg.to, bytes, series, slots);
            if self.keep_records {
                self.record_index.insert((msg.from, msg.transfer_id), self.records.len());
                self.records.push(TransferRecord::from_message(&msg));
            }
            if self.mode == GossipMode::Incremental {
                let ev = GossipEvent::Timeout { node: msg.from, peer: msg.to, transfer_id: msg.transfer_id };
                ctx.schedule(now + self.cfg.confirm_timeout, ev);
            }
            match ctx.world.send(now, msg.from, msg.to, concurrent, ctx.loss) {
                Delivery::Delivered { at, .. } => ctx.schedule(at, GossipEvent::DatasetArrive(msg)),
                Delivery::Lost { .. } => ctx.meter.log(now, TraceEvent::Lost, msg.from, msg.to, bytes, series, slots),
            }
        }
    }

    fn arrive(&mut self, msg: DatasetMessage, ctx: &mut Ctx<'_, GossipEvent>) {
        let now = ctx.now;
        let bytes = ctx.sizes.dataset_bytes(&msg.dataset);
        let (series, slots) = (msg.dataset.series_count(), msg.dataset.slot_count());
        ctx.meter.log(now, TraceEvent::Recv, msg.from, msg.to, bytes, series, slots);
        let conf = on_receive_dataset(&mut ctx.stores[msg.to.idx()], &msg).expect("datasets built by agents are well formed");
        if self.mode == GossipMode::Naive {
            return;
        }
        let bytes = ctx.sizes.confirmation_bytes(conf.newest.len());
        ctx.meter.log(now, TraceEvent::Confirm, conf.from, conf.to, bytes, conf.newest.len(), 0);
        match ctx.world.send(now, conf.from, conf.to, 0, ctx.loss) {
            Delivery::Delivered { at, .. } => ctx.schedule(at, GossipEvent::ConfirmArrive(conf)),
            Delivery::Lost { .. } => ctx.meter.log(now, TraceEvent::Lost, conf.from, conf.to, bytes, conf.newest.len(), 0),
        }
    }

    fn confirmed(&mut self, conf: Confirmation, ctx: &mut Ctx<'_, GossipEvent>) {
        let bytes = ctx.sizes.confirmation_bytes(conf.newest.len());
        ctx.meter.log(ctx.now, TraceEvent::Confirmed, conf.from, conf.to, bytes, conf.newest.len(), 0);
        if self.agents[conf.to.idx()].on_confirm(&conf, ctx.now) {
            if let Some(&i) = self.record_index.get(&(conf.to, conf.transfer_id)) {
                self.records[i].confirmed = true;
            }
        }
    }
}

impl Method for Gossip {
    type Event = GossipEvent;

    fn name(&self) -> &'static str {
        match self.mode {
            GossipMode::Incremental => "harvest",
            GossipMode::Naive => "gossip",
        }
    }

    fn init(&mut self, ctx: &mut Ctx<'_, GossipEvent>) {
        if !self.enabled {
            return;
        }
        let period = self.cfg.cycle_period.as_millis();
        for i in 0..self.agents.len() {
            let phase = SimTime(ctx.proto.gen_range(0..period));
            ctx.schedule(ctx.now + phase, GossipEvent::Cycle(NodeId::from(i)));
        }
    }

    fn on_event(&mut self, ev: GossipEvent, ctx: &mut Ctx<'_, GossipEvent>) {
        match ev {
            GossipEvent::Cycle(n) => {
                ctx.schedule(ctx.now + self.cfg.cycle_period, GossipEvent::Cycle(n));
                self.cycle(n, ctx);
            }
            GossipEvent::DatasetArrive(msg) => self.arrive(msg, ctx),
            GossipEvent::ConfirmArrive(conf) => self.confirmed(conf, ctx),
            GossipEvent::Timeout { node, peer, transfer_id } => {
                if self.agents[node.idx()].on_timeout(peer, transfer_id, ctx.now) {
                    ctx.meter.log(ctx.now, TraceEvent::Timeout, node, peer, 0, 0, 0);
                }
            }
        }
    }

    fn analyze(&mut self, client: NodeId, start: SimTime, end: SimTime, ctx: &mut Ctx<'_, GossipEvent>) -> BTreeSet<SeriesId> {
        discover_dg(&ctx.stores[client.idx()], client, start, end).edges
    }
}
