use std::collections::BTreeSet;

use crate::baselines::{Dafn, Dht, Scalar};
use crate::ids::NodeId;
use crate::protocol::{audit_incrementality, AuditSummary};
use crate::rng::{stream, Stream};
use crate::sim::{EventQueue, Mobility, World};
use crate::time::SimTime;
use crate::timeseries::{SeriesId, TimeSeriesStore};
use crate::workload::{
    fp_ratio, monitor_observe, tp_ratio, CascadeEvent, ConversationEngine, ConversationId, ConversationStatus,
    ServiceTopology, StepOutput,
};

use super::config::{ConfigError, MethodKind, ScenarioConfig};
use super::gossip::{Gossip, GossipMode};
use super::meter::Meter;
use super::method::{Ctx, Method};

const PRUNE_PERIOD: SimTime = SimTime::from_secs(60);
const REACHABILITY_SAMPLE: SimTime = SimTime::from_secs(60);

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record every harvesting message in a trace.
    pub trace: bool,
    /// Keep transfer records and audit incrementality (gossip methods).
    pub audit: bool,
    /// Record node positions at every tick.
    pub positions: bool,
    /// Return the final monitor stores.
    pub keep_stores: bool,
    /// Initial store contents, replacing empty monitors.
    pub preload: Option<Vec<TimeSeriesStore>>,
    /// Suppress client requests, leaving only the method's own activity.
    pub no_workload: bool,
}

/// Outcome of one analyzed conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationResult {
    pub id: ConversationId,
    pub client: NodeId,
    pub start: SimTime,
    pub end: SimTime,
    pub ground_truth: BTreeSet<SeriesId>,
    pub discovered: BTreeSet<SeriesId>,
}

impl ConversationResult {
    pub fn tp(&self) -> Option<f64> {
        tp_ratio(&self.discovered, &self.ground_truth)
    }

    pub fn fp(&self) -> Option<f64> {
        fp_ratio(&self.discovered, &self.ground_truth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub method: MethodKind,
    pub seed: u64,
    /// Conversations analyzed (measured window, completed).
    pub conversations: usize,
    pub tp_ratio: Option<f64>,
    pub fp_ratio: Option<f64>,
    /// Harvesting bytes sent plus received per node per second, in KB/s.
    pub overhead_kbps: Option<f64>,
    /// The same bytes spread over the node pairs that exchanged any.
    pub pair_overhead_kbps: Option<f64>,
    pub bytes: u64,
    /// Conversations started during the measured window, analyzed or not.
    pub started: usize,
    /// `(time, fraction of ordered node pairs with a route)`, sampled every minute.
    pub reachability: Vec<(SimTime, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub conversations: Vec<ConversationResult>,
    pub trace: Option<String>,
    pub positions: Option<String>,
    pub ground_truth: String,
    pub audit: Option<AuditSummary>,
    pub stores: Option<Vec<TimeSeriesStore>>,
}

enum Ev<E> {
    Tick,
    Request(NodeId),
    Cascade(CascadeEvent),
    Analyze(ConversationId),
    Prune,
    Method(E),
}

/// Runs `cfg` with the method it names.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    match cfg.method {
        MethodKind::Harvest | MethodKind::Gossip => {
            let mode = if cfg.method == MethodKind::Harvest { GossipMode::Incremental } else { GossipMode::Naive };
            let proto = cfg.protocol_config_or_idle()?;
            let enabled = cfg.cycle_period().is_some();
            let g = Gossip::new(mode, proto, cfg.nodes, enabled)
                .map_err(|e| ConfigError(format!("protocol: {e}")))?
                .keep_records(opts.audit);
            let (mut out, g) = run_with(cfg, g, opts)?;
            if opts.audit {
                out.audit = Some(audit_incrementality(g.records(), cfg.aging_limit()));
            }
            Ok(out)
        }
        MethodKind::Dht => Ok(run_with(cfg, Dht::new(cfg), opts)?.0),
        MethodKind::Dafn => Ok(run_with(cfg, Dafn::new(cfg), opts)?.0),
        MethodKind::Scalar => Ok(run_with(cfg, Scalar::new(cfg), opts)?.0),
    }
}

/// Time the run stops: the last measured conversation has been analyzed.
pub fn sim_end(cfg: &ScenarioConfig) -> SimTime {
    cfg.warmup()
        + cfg.duration()
        + SimTime::from_secs_f64(cfg.workload.response_timeout_s)
        + cfg.harvest_delay()
        + SimTime::from_secs(1)
}

/// The scenario's world at time zero. Depends only on the mobility and
/// network settings and the seed.
pub fn build_world(cfg: &ScenarioConfig) -> World {
    let mut rng = stream(cfg.seed, Stream::Mobility);
    let mobility = Mobility::new(cfg.mobility.clone(), cfg.nodes, &mut rng);
    World::new(mobility, cfg.network.link_model(), cfg.tick(), rng)
}

/// Drives one scenario with an arbitrary method and returns it afterwards.
pub fn run_with<M: Method>(cfg: &ScenarioConfig, mut method: M, opts: &RunOptions) -> Result<(RunOutput, M), ConfigError> {
    cfg.validate()?;
    let seed = cfg.seed;
    let mut world = build_world(cfg);
    let mut workload_rng = stream(seed, Stream::Workload);
    let mut service_rng = stream(seed, Stream::ServiceLoss);
    let mut loss = stream(seed, Stream::Loss);
    let mut proto = stream(seed, Stream::Protocol);

    let topo = ServiceTopology::generate(&cfg.topology, cfg.nodes, &mut workload_rng).map_err(|e| ConfigError(e.to_string()))?;
    let mut engine = ConversationEngine::new(topo, cfg.workload.cascade());
    let monitor = cfg.monitor_slot()?;
    let retention = SimTime::from_secs_f64(cfg.retention_s);
    let mut stores = match &opts.preload {
        Some(s) => {
            if s.len() != cfg.nodes {
                return Err(ConfigError(format!("preload: expected {} stores, got {}", cfg.nodes, s.len())));
            }
            s.clone()
        }
        None => vec![TimeSeriesStore::new(monitor, retention); cfg.nodes],
    };

    let (warmup, measured_end) = (cfg.warmup(), cfg.warmup() + cfg.duration());
    let end = sim_end(cfg);
    let delay = cfg.harvest_delay();
    // Traffic is metered over the measured window shifted by the delay, so
    // analyses of measured conversations fall inside it.
    let mut meter = Meter::new(method.name(), cfg.nodes, warmup + delay, measured_end + delay, opts.trace);
    let sizes = cfg.sizes;

    let mut q: EventQueue<Ev<M::Event>> = EventQueue::new();
    let mut pending: Vec<(SimTime, M::Event)> = Vec::new();
    q.schedule(world.tick(), Ev::Tick);
    q.schedule(PRUNE_PERIOD, Ev::Prune);
    if !opts.no_workload {
        for n in world.nodes() {
            q.schedule(cfg.workload.first_request(&mut workload_rng), Ev::Request(n));
        }
    }

    let mut positions = opts.positions.then(|| String::from("time,node,x,y\n"));
    if let Some(p) = &mut positions {
        p.push_str(&world.position_trace());
    }
    let mut reachability = vec![(SimTime::ZERO, pair_reachability(&world))];
    let mut next_sample = REACHABILITY_SAMPLE;

    macro_rules! ctx {
        ($now:expr) => {
            Ctx {
                now: $now,
                world: &world,
                stores: &mut stores,
                loss: &mut loss,
                proto: &mut proto,
                meter: &mut meter,
                sizes: &sizes,
                schedule: &mut pending,
            }
        };
    }

    method.init(&mut ctx!(SimTime::ZERO));
    drain(&mut q, &mut pending);

    let mut results = Vec::new();
    let mut started = 0usize;
    let mut step = StepOutput::default();

    while let Some((now, ev)) = q.pop() {
        if now > end {
            break;
        }
        match ev {
            Ev::Tick => {
                world.advance_tick();
                if let Some(p) = &mut positions {
                    p.push_str(&world.position_trace());
                }
                if world.time() >= next_sample {
                    reachability.push((world.time(), pair_reachability(&world)));
                    next_sample += REACHABILITY_SAMPLE;
                }
                q.schedule(now + world.tick(), Ev::Tick);
                method.on_tick(&mut ctx!(now));
            }
            Ev::Request(client) => {
                let m = engine.pick_method(&mut workload_rng);
                if now >= warmup && now < measured_end {
                    started += 1;
                }
                engine.start(client, m, now, &world, &mut service_rng, &mut step);
                q.schedule(now + cfg.workload.next_gap(&mut workload_rng), Ev::Request(client));
            }
            Ev::Cascade(c) => engine.handle(now, c, &world, &mut service_rng, &mut step),
            Ev::Analyze(id) => {
                let c = engine.get(id);
                let (start, stop) = c.window().expect("analyzed conversations have ended");
                let client = c.client;
                let discovered = method.analyze(client, start, stop, &mut ctx!(now));
                let c = engine.get(id);
                results.push(ConversationResult {
                    id,
                    client,
                    start,
                    end: stop,
                    ground_truth: c.ground_truth.clone(),
                    discovered,
                });
            }
            Ev::Prune => {
                for s in stores.iter_mut() {
                    s.prune(now);
                }
                method.on_prune(&mut ctx!(now));
                q.schedule(now + PRUNE_PERIOD, Ev::Prune);
            }
            Ev::Method(e) => method.on_event(e, &mut ctx!(now)),
        }

        for obs in step.observations.drain(..) {
            monitor_observe(&mut stores, &obs);
        }
        for (at, c) in step.schedule.drain(..) {
            q.schedule(at, Ev::Cascade(c));
        }
        for id in step.finished.drain(..) {
            let c = engine.get(id);
            if c.status == ConversationStatus::Completed
                && c.start >= warmup
                && c.start < measured_end
                && cfg.analysis.includes(c.client)
                && !c.ground_truth.is_empty()
            {
                let stop = c.end.expect("finished");
                q.schedule(stop + delay, Ev::Analyze(id));
            }
        }
        drain(&mut q, &mut pending);
    }

    results.sort_by_key(|r| r.id);
    let metrics = summarize(cfg, &meter, &results, started, reachability);
    let out = RunOutput {
        metrics,
        conversations: results,
        trace: meter.take_trace(),
        positions,
        ground_truth: engine.ground_truth_trace(),
        audit: None,
        stores: opts.keep_stores.then_some(stores),
    };
    Ok((out, method))
}

fn drain<E>(q: &mut EventQueue<Ev<E>>, pending: &mut Vec<(SimTime, E)>) {
    for (at, e) in pending.drain(..) {
        q.schedule(at, Ev::Method(e));
    }
}

/// Fraction of ordered pairs of distinct nodes joined by a route.
fn pair_reachability(world: &World) -> f64 {
    let n = world.node_count();
    let hops = world.hops();
    let mut ok = 0usize;
    for a in world.nodes() {
        ok += hops.row(a).iter().filter(|h| matches!(h, Some(d) if *d > 0)).count();
    }
    ok as f64 / (n * (n - 1)) as f64
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(
    cfg: &ScenarioConfig,
    meter: &Meter,
    results: &[ConversationResult],
    started: usize,
    reachability: Vec<(SimTime, f64)>,
) -> RunMetrics {
    let secs = cfg.duration().as_secs_f64();
    let bytes = meter.total_bytes();
    let overhead = (secs > 0.0).then(|| bytes as f64 / cfg.nodes as f64 / secs / 1000.0);
    let pairs = meter.pair_count();
    let pair_overhead = (secs > 0.0).then(|| if pairs == 0 { 0.0 } else { bytes as f64 / pairs as f64 / secs / 1000.0 });
    RunMetrics {
        method: cfg.method,
        seed: cfg.seed,
        conversations: results.iter().filter(|r| r.tp().is_some()).count(),
        tp_ratio: mean(results.iter().filter_map(ConversationResult::tp)),
        fp_ratio: mean(results.iter().filter_map(ConversationResult::fp)),
        overhead_kbps: overhead,
        pair_overhead_kbps: pair_overhead,
        bytes,
        started,
        reachability,
    }
}
