use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::topology::ServiceTopology;
use crate::ids::{Endpoint, NodeId};
use crate::rng::SimRng;
use crate::sim::{Delivery, World};
use crate::time::SimTime;
use crate::timeseries::SeriesId;

pub type ConversationId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceDelivery {
    /// Service calls ride a retransmitting transport: delivered iff routed.
    Reliable,
    /// Service calls suffer the same per-link loss as every other message.
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConversationStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub id: ConversationId,
    pub client: NodeId,
    pub method: usize,
    pub start: SimTime,
    pub end: Option<SimTime>,
    pub status: ConversationStatus,
    /// The client followed by every service replica bound so far.
    pub endpoints: Vec<Endpoint>,
    /// Send time of the request into each bound replica.
    pub request_times: Vec<SimTime>,
    /// Every dependence pair for which a request was sent.
    pub ground_truth: BTreeSet<SeriesId>,
}

impl Conversation {
    pub fn window(&self) -> Option<(SimTime, SimTime)> {
        self.end.map(|e| (self.start, e))
    }

    pub fn is_running(&self) -> bool {
        self.status == ConversationStatus::Running
    }

    /// Nodes hosting the bound service replicas.
    pub fn service_hosts(&self) -> Vec<NodeId> {
        self.endpoints[1..].iter().map(|e| e.host()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeEvent {
    RequestArrive { conv: ConversationId, hop: usize, sent: SimTime },
    ServiceDone { conv: ConversationId, hop: usize },
    ResponseArrive { conv: ConversationId, hop: usize, sent: SimTime },
    Deadline { conv: ConversationId },
}

/// A dependence occurrence seen by the monitor on `node`, stamped `at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub node: NodeId,
    pub series: SeriesId,
    pub at: SimTime,
}

#[derive(Debug, Default)]
pub struct StepOutput {
    pub schedule: Vec<(SimTime, CascadeEvent)>,
    pub observations: Vec<Observation>,
    pub finished: Vec<ConversationId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    /// Time a service spends on a request before calling onward or replying.
    pub service_time: SimTime,
    pub response_timeout: SimTime,
    pub delivery: ServiceDelivery,
}

/// Drives request/response cascades along each entry method's service chain.
/// Every hop binds to the nearest replica at the moment the call is made.
#[derive(Debug, Clone)]
pub struct ConversationEngine {
    topo: ServiceTopology,
    cfg: CascadeConfig,
    convs: Vec<Conversation>,
}

impl ConversationEngine {
    pub fn new(topo: ServiceTopology, cfg: CascadeConfig) -> Self {
        ConversationEngine { topo, cfg, convs: Vec::new() }
    }

    pub fn topology(&self) -> &ServiceTopology {
        &self.topo
    }

    pub fn conversations(&self) -> &[Conversation] {
        &self.convs
    }

    pub fn get(&self, id: ConversationId) -> &Conversation {
        &self.convs[id]
    }

    pub fn pick_method<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.topo.methods().len())
    }

    pub fn start(
        &mut self,
        client: NodeId,
        method: usize,
        now: SimTime,
        world: &World,
        rng: &mut SimRng,
        out: &mut StepOutput,
    ) -> ConversationId {
        let id = self.convs.len();
        self.convs.push(Conversation {
            id,
            client,
            method,
            start: now,
            end: None,
            status: ConversationStatus::Running,
            endpoints: vec![Endpoint::Client(client)],
            request_times: Vec::new(),
            ground_truth: BTreeSet::new(),
        });
        out.schedule.push((now + self.cfg.response_timeout, CascadeEvent::Deadline { conv: id }));
        self.send_request(id, 0, now, world, rng, out);
        id
    }

    pub fn handle(&mut self, now: SimTime, ev: CascadeEvent, world: &World, rng: &mut SimRng, out: &mut StepOutput) {
        let conv = match ev {
            CascadeEvent::RequestArrive { conv, .. }
            | CascadeEvent::ServiceDone { conv, .. }
            | CascadeEvent::ResponseArrive { conv, .. }
            | CascadeEvent::Deadline { conv } => conv,
        };
        if !self.convs[conv].is_running() {
            return;
        }
        match ev {
            CascadeEvent::RequestArrive { hop, sent, .. } => {
                let c = &self.convs[conv];
                let series = self.series(c, hop);
                out.observations.push(Observation { node: c.endpoints[hop + 1].host(), series, at: sent });
                out.schedule.push((now + self.cfg.service_time, CascadeEvent::ServiceDone { conv, hop }));
            }
            CascadeEvent::ServiceDone { hop, .. } => {
                let chain_len = self.topo.methods()[self.convs[conv].method].chain.len();
                if hop + 1 < chain_len {
                    self.send_request(conv, hop + 1, now, world, rng, out);
                } else {
                    self.send_response(conv, hop, now, world, rng, out);
                }
            }
            CascadeEvent::ResponseArrive { hop, sent, .. } => {
                let c = &self.convs[conv];
                let series = self.series(c, hop);
                out.observations.push(Observation { node: c.endpoints[hop].host(), series, at: sent });
                if hop == 0 {
                    let c = &mut self.convs[conv];
                    c.status = ConversationStatus::Completed;
                    c.end = Some(now);
                    out.finished.push(conv);
                } else {
                    self.send_response(conv, hop - 1, now, world, rng, out);
                }
            }
            CascadeEvent::Deadline { .. } => {
                let c = &mut self.convs[conv];
                c.status = ConversationStatus::Failed;
                c.end = Some(c.start + self.cfg.response_timeout);
                out.finished.push(conv);
            }
        }
    }

    fn series(&self, c: &Conversation, hop: usize) -> SeriesId {
        SeriesId::new(c.endpoints[hop], c.endpoints[hop + 1]).expect("chain services are distinct")
    }

    fn deliver(&self, now: SimTime, src: NodeId, dst: NodeId, world: &World, rng: &mut SimRng) -> Delivery {
        match self.cfg.delivery {
            ServiceDelivery::Reliable => world.send_reliable(now, src, dst),
            ServiceDelivery::Lossy => world.send(now, src, dst, 0, rng),
        }
    }

    fn send_request(&mut self, conv: ConversationId, hop: usize, now: SimTime, world: &World, rng: &mut SimRng, out: &mut StepOutput) {
        let c = &self.convs[conv];
        let caller = c.endpoints[hop];
        let service = self.topo.methods()[c.method].chain[hop];
        // no reachable replica: the caller never hears back and the deadline fails it
        let Some(host) = self.topo.bind(service, caller.host(), world.hops()) else { return };
        let callee = Endpoint::Service { service, host };
        let series = SeriesId::new(caller, callee).expect("chain services are distinct");
        let delivery = self.deliver(now, caller.host(), host, world, rng);
        let c = &mut self.convs[conv];
        c.endpoints.push(callee);
        c.request_times.push(now);
        c.ground_truth.insert(series);
        out.observations.push(Observation { node: caller.host(), series, at: now });
        if let Delivery::Delivered { at, .. } = delivery {
            out.schedule.push((at, CascadeEvent::RequestArrive { conv, hop, sent: now }));
        }
    }

    fn send_response(&mut self, conv: ConversationId, hop: usize, now: SimTime, world: &World, rng: &mut SimRng, out: &mut StepOutput) {
        let c = &self.convs[conv];
        let series = self.series(c, hop);
        let (caller, callee) = (c.endpoints[hop].host(), c.endpoints[hop + 1].host());
        out.observations.push(Observation { node: callee, series, at: now });
        if let Delivery::Delivered { at, .. } = self.deliver(now, callee, caller, world, rng) {
            out.schedule.push((at, CascadeEvent::ResponseArrive { conv, hop, sent: now }));
        }
    }

    /// `conversation,source,target,time` lines, one per request sent.
    pub fn ground_truth_trace(&self) -> String {
        let mut out = String::new();
        for c in &self.convs {
            for (pair, t) in c.endpoints.windows(2).zip(&c.request_times) {
                let _ = writeln!(out, "{},{},{},{}", c.id, pair[0], pair[1], t);
            }
        }
        out
    }
}
