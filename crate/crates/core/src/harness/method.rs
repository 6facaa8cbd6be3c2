use std::collections::BTreeSet;

use crate::ids::NodeId;
use crate::protocol::SizeModel;
use crate::rng::SimRng;
use crate::sim::World;
use crate::time::SimTime;
use crate::timeseries::{SeriesId, TimeSeriesStore};

use super::meter::Meter;

/// What a harvesting method sees of the simulation when it is called.
pub struct Ctx<'a, E> {
    pub now: SimTime,
    pub world: &'a World,
    /// Monitor stores, one per node, at monitor resolution.
    pub stores: &'a mut [TimeSeriesStore],
    /// Loss draws for the method's own messages.
    pub loss: &'a mut SimRng,
    /// Peer choices and other protocol randomness.
    pub proto: &'a mut SimRng,
    pub meter: &'a mut Meter,
    pub sizes: &'a SizeModel,
    pub(crate) schedule: &'a mut Vec<(SimTime, E)>,
}

impl<E> Ctx<'_, E> {
    pub fn schedule(&mut self, at: SimTime, ev: E) {
        debug_assert!(at >= self.now);
        self.schedule.push((at, ev));
    }

    pub fn node_count(&self) -> usize {
        self.stores.len()
    }
}

/// A harvesting method plugged into the scenario runner.
pub trait Method {
    type Event;

    fn name(&self) -> &'static str;

    fn init(&mut self, _ctx: &mut Ctx<'_, Self::Event>) {}

    /// Called after every mobility tick.
    fn on_tick(&mut self, _ctx: &mut Ctx<'_, Self::Event>) {}

    fn on_event(&mut self, ev: Self::Event, ctx: &mut Ctx<'_, Self::Event>);

    /// Dependencies of `client` over `[start, end]` as seen from `client`
    /// at `ctx.now`.
    fn analyze(&mut self, client: NodeId, start: SimTime, end: SimTime, ctx: &mut Ctx<'_, Self::Event>) -> BTreeSet<SeriesId>;

    /// Periodic housekeeping, after the monitor stores were pruned.
    fn on_prune(&mut self, _ctx: &mut Ctx<'_, Self::Event>) {}
}
