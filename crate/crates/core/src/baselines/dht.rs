use std::collections::BTreeSet;

use crate::harness::{Ctx, Method, ScenarioConfig, TraceEvent};
use crate::ids::{Endpoint, NodeId};
use crate::sim::Delivery;
use crate::time::SimTime;
use crate::timeseries::SeriesId;
use crate::workload::{active_from, closure};

use super::{monitors, series_dataset, series_index};

/// On-demand pulls straight from the monitor hosting each series, with the
/// index of series locations assumed free and globally known.
#[derive(Debug, Clone, Default)]
pub struct Dht;

impl Dht {
    pub fn new(_cfg: &ScenarioConfig) -> Self {
        Dht
    }
}

/// Requests `id` over `[start, end]` from the host of its source. Returns
/// whether the delivered answer shows activity, or `None` if the request or
/// the response was lost.
pub(crate) fn pull_from_host(
    ctx: &mut Ctx<'_, ()>,
    requester: NodeId,
    id: SeriesId,
    start: SimTime,
    end: SimTime,
) -> Option<bool> {
    let now = ctx.now;
    let host = id.source.host();
    let req = ctx.sizes.request_bytes(1);
    ctx.meter.log(now, TraceEvent::Send, requester, host, req, 1, 0);
    let Delivery::Delivered { .. } = ctx.world.send(now, requester, host, 0, ctx.loss) else {
        ctx.meter.log(now, TraceEvent::Lost, requester, host, req, 1, 0);
        return None;
    };
    ctx.meter.log(now, TraceEvent::Recv, requester, host, req, 1, 0);
    let store = &ctx.stores[host.idx()];
    let ds = series_dataset(store.get(&id), store.slot_len(), start, end);
    let bytes = ctx.sizes.dataset_bytes(&ds);
    let (series, slots) = (ds.series_count(), ds.slot_count());
    ctx.meter.log(now, TraceEvent::Send, host, requester, bytes, series, slots);
    let Delivery::Delivered { .. } = ctx.world.send(now, host, requester, 0, ctx.loss) else {
        ctx.meter.log(now, TraceEvent::Lost, host, requester, bytes, series, slots);
        return None;
    };
    ctx.meter.log(now, TraceEvent::Recv, host, requester, bytes, series, slots);
    Some(!ds.is_empty())
}

impl Method for Dht {
    type Event = ();

    fn name(&self) -> &'static str {
        "dht"
    }

    fn on_event(&mut self, _ev: (), _ctx: &mut Ctx<'_, ()>) {}

    fn analyze(&mut self, client: NodeId, start: SimTime, end: SimTime, ctx: &mut Ctx<'_, ()>) -> BTreeSet<SeriesId> {
        closure(Endpoint::Client(client), |e| {
            let mut ids = active_from(&ctx.stores[client.idx()], e, start, end);
            for id in series_index(ctx.stores, e) {
                if !monitors(client, &id) && pull_from_host(ctx, client, id, start, end) == Some(true) {
                    ids.push(id);
                }
            }
            ids
        })
    }
}
