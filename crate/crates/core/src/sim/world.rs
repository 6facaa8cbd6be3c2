use std::fmt::Write as _;

use rand::Rng;

use crate::ids::NodeId;
use crate::rng::SimRng;
use crate::sim::link::{Delivery, LinkModel};
use crate::sim::mobility::{Mobility, Position};
use crate::sim::topology::{connectivity, Adjacency, HopTable};
use crate::time::SimTime;

/// Mobility tick: positions, adjacency and hop tables refresh at this period.
pub const DEFAULT_TICK: SimTime = SimTime::from_millis(1000);

/// Positions, connectivity and routing distances at the current tick.
#[derive(Debug, Clone)]
pub struct World {
    time: SimTime,
    tick: SimTime,
    mobility: Mobility,
    link: LinkModel,
    adjacency: Adjacency,
    hops: HopTable,
    rng: SimRng,
}

impl World {
    /// `rng` is the mobility stream; it is consumed only by movement.
    pub fn new(mobility: Mobility, link: LinkModel, tick: SimTime, rng: SimRng) -> Self {
        let adjacency = connectivity(mobility.positions(), link.radio_range_m);
        let hops = HopTable::compute(&adjacency);
        World { time: SimTime::ZERO, tick, mobility, link, adjacency, hops, rng }
    }

    pub fn time(&self) -> SimTime {
        self.time
    }

    pub fn tick(&self) -> SimTime {
        self.tick
    }

    pub fn node_count(&self) -> usize {
        self.mobility.positions().len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId::from)
    }

    pub fn positions(&self) -> &[Position] {
        self.mobility.positions()
    }

    pub fn mobility(&self) -> &Mobility {
        &self.mobility
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn hops(&self) -> &HopTable {
        &self.hops
    }

    pub fn link(&self) -> &LinkModel {
        &self.link
    }

    /// Moves every node by one tick and recomputes connectivity.
    pub fn advance_tick(&mut self) {
        self.mobility.advance(self.tick.as_secs_f64(), &mut self.rng);
        self.time += self.tick;
        self.adjacency = connectivity(self.mobility.positions(), self.link.radio_range_m);
        self.hops = HopTable::compute(&self.adjacency);
    }

    /// Decides the fate of a message sent at `now` from `src` to `dst` along
    /// the current shortest path. Loss draws come from `rng`, never the
    /// mobility stream.
    pub fn send(&self, now: SimTime, src: NodeId, dst: NodeId, concurrent_local_sends: usize, rng: &mut SimRng) -> Delivery {
        let Some(hops) = self.hops.get(src, dst) else {
            return Delivery::Lost { hops: None };
        };
        let p = self.link.path_prob(hops, concurrent_local_sends);
        if hops == 0 || rng.gen::<f64>() < p {
            Delivery::Delivered { at: now + self.link.latency(hops), hops }
        } else {
            Delivery::Lost { hops: Some(hops) }
        }
    }

    /// Transport with retransmission: delivered whenever a route exists.
    pub fn send_reliable(&self, now: SimTime, src: NodeId, dst: NodeId) -> Delivery {
        match self.hops.get(src, dst) {
            Some(hops) => Delivery::Delivered { at: now + self.link.latency(hops), hops },
            None => Delivery::Lost { hops: None },
        }
    }

    /// `time,node,x,y` lines for the current tick.
    pub fn position_trace(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.positions().iter().enumerate() {
            let _ = writeln!(out, "{},{i},{:.3},{:.3}", self.time, p.x, p.y);
        }
        out
    }
}

/// Fraction of `targets` (observer excluded) with a route from `observer`.
/// `None` if there is nothing to measure.
pub fn fraction_reachable(hops: &HopTable, observer: NodeId, targets: &[NodeId]) -> Option<f64> {
    let measured: Vec<_> = targets.iter().filter(|&&t| t != observer).collect();
    if measured.is_empty() {
        return None;
    }
    let ok = measured.iter().filter(|&&&t| hops.get(observer, t).is_some()).count();
    Some(ok as f64 / measured.len() as f64)
}

/// Advances `world` up to `horizon`, sampling the reachable fraction of
/// `targets` from `observer` every `step` (starting at the current time).
pub fn reachability_report(
    world: &mut World,
    observer: NodeId,
    targets: &[NodeId],
    horizon: SimTime,
    step: SimTime,
) -> Vec<(SimTime, f64)> {
    let start = world.time();
    let end = start + horizon;
    let mut out = Vec::new();
    let mut next = start;
    loop {
        while world.time() < next {
            world.advance_tick();
        }
        let f = fraction_reachable(world.hops(), observer, targets).unwrap_or(1.0);
        out.push((next - start, f));
        next += step;
        if next > end {
            break;
        }
    }
    out
}
