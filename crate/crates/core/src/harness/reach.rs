use crate::ids::NodeId;
use crate::sim::topology::component_labels;
use crate::time::SimTime;

use super::config::{ConfigError, ScenarioConfig};
use super::runner::{build_world, run_scenario, RunOptions};

/// Reachability of the nodes a client talked to, after the conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityCurve {
    /// `(delay after conversation end, mean fraction of service hosts in
    /// the client's connected component)`.
    pub points: Vec<(SimTime, f64)>,
    pub conversations: usize,
}

impl ReachabilityCurve {
    pub fn at(&self, delay: SimTime) -> Option<f64> {
        self.points.iter().find(|(d, _)| *d == delay).map(|&(_, f)| f)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_s,reachable\n");
        for (d, f) in &self.points {
            out.push_str(&format!("{d},{f:.6}\n"));
        }
        out
    }
}

/// For every measured conversation, the fraction of its remote service
/// hosts reachable from the client at each delay `0, step, .., horizon`
/// after its end, averaged over conversations.
pub fn reachability_curve(cfg: &ScenarioConfig, horizon: SimTime, step: SimTime) -> Result<ReachabilityCurve, ConfigError> {
    if step == SimTime::ZERO {
        return Err(ConfigError("reachability step must be positive".into()));
    }
    let mut probe = cfg.clone();
    probe.gossip_cycles = 0;
    probe.harvest_delay_s = 0.0;
    probe.method = super::MethodKind::Harvest;
    let run = run_scenario(&probe, &RunOptions::default())?;

    let convs: Vec<(NodeId, SimTime, Vec<NodeId>)> = run
        .conversations
        .iter()
        .map(|c| {
            let mut hosts: Vec<NodeId> = c.ground_truth.iter().map(|s| s.target.host()).filter(|&h| h != c.client).collect();
            hosts.sort_unstable();
            hosts.dedup();
            (c.client, c.end, hosts)
        })
        .filter(|(_, _, h)| !h.is_empty())
        .collect();
    let last = convs.iter().map(|c| c.1).max().unwrap_or(SimTime::ZERO) + horizon;

    // component labels per tick, replaying the same mobility
    let mut world = build_world(cfg);
    let tick = world.tick().as_millis();
    let mut labels = vec![component_labels(world.adjacency())];
    while world.time() < last {
        world.advance_tick();
        labels.push(component_labels(world.adjacency()));
    }
    let at = |t: SimTime| &labels[((t.as_millis() / tick) as usize).min(labels.len() - 1)];

    let mut points = Vec::new();
    let mut d = SimTime::ZERO;
    while d <= horizon {
        let mut sum = 0.0;
        for (client, end, hosts) in &convs {
            let l = at(*end + d);
            let ok = hosts.iter().filter(|h| l[h.idx()] == l[client.idx()]).count();
            sum += ok as f64 / hosts.len() as f64;
        }
        points.push((d, if convs.is_empty() { 1.0 } else { sum / convs.len() as f64 }));
        d += step;
    }
    Ok(ReachabilityCurve { points, conversations: convs.len() })
}
