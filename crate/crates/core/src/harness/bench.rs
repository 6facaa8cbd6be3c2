use crate::protocol::SizeModel;
use crate::rng::{stream, SimRng, Stream};
use crate::sim::{EventQueue, World};
use crate::time::SimTime;
use crate::timeseries::TimeSeriesStore;

use super::meter::Meter;
use super::method::{Ctx, Method};

/// A bare driver for one method over a given world and stores, without
/// any workload: useful for pre-seeded experiments and tests.
pub struct Bench<E> {
    pub world: World,
    pub stores: Vec<TimeSeriesStore>,
    pub loss: SimRng,
    pub proto: SimRng,
    pub meter: Meter,
    pub sizes: SizeModel,
    now: SimTime,
    queue: EventQueue<E>,
    pending: Vec<(SimTime, E)>,
}

impl<E> Bench<E> {
    /// Counts every message from time zero on.
    pub fn new(world: World, stores: Vec<TimeSeriesStore>, seed: u64, trace: bool) -> Self {
        let n = stores.len();
        Bench {
            world,
            stores,
            loss: stream(seed, Stream::Loss),
            proto: stream(seed, Stream::Protocol),
            meter: Meter::new("bench", n, SimTime::ZERO, SimTime(u64::MAX), trace),
            sizes: SizeModel::default(),
            now: SimTime::ZERO,
            queue: EventQueue::new(),
            pending: Vec::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn ctx(&mut self) -> Ctx<'_, E> {
        Ctx {
            now: self.now,
            world: &self.world,
            stores: &mut self.stores,
            loss: &mut self.loss,
            proto: &mut self.proto,
            meter: &mut self.meter,
            sizes: &self.sizes,
            schedule: &mut self.pending,
        }
    }

    fn flush(&mut self) {
        for (at, e) in self.pending.drain(..) {
            self.queue.schedule(at, e);
        }
    }

    pub fn init<M: Method<Event = E>>(&mut self, m: &mut M) {
        m.init(&mut self.ctx());
        self.flush();
    }

    /// Processes method events up to and including `until`, moving the world
    /// a tick at a time as the clock passes tick boundaries.
    pub fn run_until<M: Method<Event = E>>(&mut self, m: &mut M, until: SimTime) {
        loop {
            let next = self.queue.peek_time().filter(|&t| t <= until);
            let horizon = next.unwrap_or(until);
            while self.world.time() + self.world.tick() <= horizon {
                self.world.advance_tick();
                self.now = self.world.time();
                m.on_tick(&mut self.ctx());
                self.flush();
            }
            let Some(t) = self.queue.peek_time().filter(|&t| t <= until) else { break };
            let (_, ev) = self.queue.pop().expect("peeked");
            self.now = t;
            m.on_event(ev, &mut self.ctx());
            self.flush();
        }
        self.now = self.now.max(until);
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }
}
