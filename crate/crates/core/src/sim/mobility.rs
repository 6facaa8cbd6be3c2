//! Node mobility: random waypoint and nomadic community group motion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn dist(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityModel {
    RandomWaypoint,
    NomadicCommunity,
    /// Nodes never move; positions are drawn once, uniformly.
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub width_m: f64,
    pub height_m: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub pause_s: f64,
    pub group_count: usize,
    pub group_radius_m: f64,
}

/// 3 km/h and 6.6 km/h in metres per second.
pub const WALK_SPEED_MIN_MPS: f64 = 3.0 / 3.6;
pub const WALK_SPEED_MAX_MPS: f64 = 6.6 / 3.6;

impl MobilityConfig {
    pub fn random_waypoint() -> Self {
        MobilityConfig {
            model: MobilityModel::RandomWaypoint,
            width_m: 1000.0,
            height_m: 2000.0,
            speed_min_mps: WALK_SPEED_MIN_MPS,
            speed_max_mps: WALK_SPEED_MAX_MPS,
            pause_s: 0.0,
            group_count: 1,
            group_radius_m: 0.0,
        }
    }

    pub fn nomadic_community() -> Self {
        MobilityConfig {
            model: MobilityModel::NomadicCommunity,
            width_m: 2000.0,
            height_m: 2000.0,
            group_count: 5,
            group_radius_m: 100.0,
            ..Self::random_waypoint()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return Err("mobility.area must be positive".into());
        }
        if self.model != MobilityModel::Static
            && !(self.speed_min_mps > 0.0 && self.speed_min_mps <= self.speed_max_mps)
        {
            return Err("mobility.speed must satisfy 0 < min <= max".into());
        }
        if self.pause_s < 0.0 {
            return Err("mobility.pause_s must be non-negative".into());
        }
        if self.model == MobilityModel::NomadicCommunity && self.group_count == 0 {
            return Err("mobility.group_count must be at least 1".into());
        }
        if self.group_radius_m < 0.0 {
            return Err("mobility.group_radius_m must be non-negative".into());
        }
        Ok(())
    }

    fn uniform_point(&self, rng: &mut SimRng) -> Position {
        Position::new(rng.gen::<f64>() * self.width_m, rng.gen::<f64>() * self.height_m)
    }

    fn draw_speed(&self, rng: &mut SimRng) -> f64 {
        if self.speed_max_mps > self.speed_min_mps {
            rng.gen_range(self.speed_min_mps..=self.speed_max_mps)
        } else {
            self.speed_min_mps
        }
    }

    fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width_m), p.y.clamp(0.0, self.height_m))
    }
}

/// Kinematic state of one random-waypoint mover.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointState {
    pub pos: Position,
    pub waypoint: Position,
    pub speed: f64,
    pub pause_left: f64,
}

impl WaypointState {
    pub fn spawn(cfg: &MobilityConfig, rng: &mut SimRng) -> Self {
        let pos = cfg.uniform_point(rng);
        let waypoint = cfg.uniform_point(rng);
        let speed = cfg.draw_speed(rng);
        WaypointState { pos, waypoint, speed, pause_left: 0.0 }
    }

    fn retarget(&mut self, cfg: &MobilityConfig, rng: &mut SimRng) {
        self.waypoint = cfg.uniform_point(rng);
        self.speed = cfg.draw_speed(rng);
    }
}

const EPS: f64 = 1e-9;

/// Advances one random-waypoint node by `dt` seconds. On arrival the node
/// pauses for `pause_s`, then draws a fresh waypoint and speed.
pub fn step_random_waypoint(state: &mut WaypointState, dt: f64, cfg: &MobilityConfig, rng: &mut SimRng) {
    let mut left = dt;
    while left > EPS {
        if state.pause_left > 0.0 {
            let p = state.pause_left.min(left);
            state.pause_left -= p;
            left -= p;
            if state.pause_left <= EPS {
                state.pause_left = 0.0;
                state.retarget(cfg, rng);
            }
            continue;
        }
        if state.speed <= 0.0 {
            break;
        }
        let dist = state.pos.dist(state.waypoint);
        let reach = state.speed * left;
        if reach + EPS >= dist {
            state.pos = state.waypoint;
            left -= dist / state.speed;
            if cfg.pause_s > 0.0 {
                state.pause_left = cfg.pause_s;
            } else {
                state.retarget(cfg, rng);
            }
        } else {
            let f = reach / dist;
            state.pos.x += (state.waypoint.x - state.pos.x) * f;
            state.pos.y += (state.waypoint.y - state.pos.y) * f;
            left = 0.0;
        }
    }
}

/// Group reference points plus node-to-group membership.
#[derive(Debug, Clone, PartialEq)]
pub struct NomadicGroups {
    pub refs: Vec<WaypointState>,
    pub membership: Vec<usize>,
}

impl NomadicGroups {
    /// Nodes are split into contiguous, near-equal blocks, one per group.
    pub fn spawn(cfg: &MobilityConfig, nodes: usize, rng: &mut SimRng) -> Self {
        let g = cfg.group_count.max(1);
        let refs = (0..g).map(|_| WaypointState::spawn(cfg, rng)).collect();
        let membership = (0..nodes).map(|i| i * g / nodes.max(1)).collect();
        NomadicGroups { refs, membership }
    }
}

fn place_member(cfg: &MobilityConfig, center: Position, rng: &mut SimRng) -> Position {
    if cfg.group_radius_m <= 0.0 {
        return center;
    }
    let r = cfg.group_radius_m * rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    cfg.clamp(Position::new(center.x + r * theta.cos(), center.y + r * theta.sin()))
}

/// Moves every group's reference point by random waypoint, then scatters
/// members uniformly within `group_radius_m` of their reference.
pub fn step_nomadic(
    groups: &mut NomadicGroups,
    positions: &mut [Position],
    dt: f64,
    cfg: &MobilityConfig,
    rng: &mut SimRng,
) {
    if dt <= 0.0 {
        return;
    }
    for r in &mut groups.refs {
        step_random_waypoint(r, dt, cfg, rng);
    }
    for (node, pos) in positions.iter_mut().enumerate() {
        let center = groups.refs[groups.membership[node]].pos;
        *pos = place_member(cfg, center, rng);
    }
}

#[derive(Debug, Clone)]
enum MoverState {
    Waypoint(Vec<WaypointState>),
    Nomadic(NomadicGroups),
    Static,
}

/// Mobility of the whole node population.
#[derive(Debug, Clone)]
pub struct Mobility {
    cfg: MobilityConfig,
    state: MoverState,
    positions: Vec<Position>,
}

impl Mobility {
    pub fn new(cfg: MobilityConfig, nodes: usize, rng: &mut SimRng) -> Self {
        match cfg.model {
            MobilityModel::RandomWaypoint => {
                let movers: Vec<_> = (0..nodes).map(|_| WaypointState::spawn(&cfg, rng)).collect();
                let positions = movers.iter().map(|m| m.pos).collect();
                Mobility { cfg, state: MoverState::Waypoint(movers), positions }
            }
            MobilityModel::NomadicCommunity => {
                let groups = NomadicGroups::spawn(&cfg, nodes, rng);
                let positions = (0..nodes)
                    .map(|i| place_member(&cfg, groups.refs[groups.membership[i]].pos, rng))
                    .collect();
                Mobility { cfg, state: MoverState::Nomadic(groups), positions }
            }
            MobilityModel::Static => {
                let positions = (0..nodes).map(|_| cfg.uniform_point(rng)).collect();
                Mobility { cfg, state: MoverState::Static, positions }
            }
        }
    }

    /// Fixed, caller-supplied placement (tests and hand-built topologies).
    pub fn fixed(positions: Vec<Position>) -> Self {
        let (w, h) = positions
            .iter()
            .fold((1.0f64, 1.0f64), |(w, h), p| (w.max(p.x), h.max(p.y)));
        let cfg = MobilityConfig {
            model: MobilityModel::Static,
            width_m: w,
            height_m: h,
            ..MobilityConfig::random_waypoint()
        };
        Mobility { cfg, state: MoverState::Static, positions }
    }

    pub fn config(&self) -> &MobilityConfig {
        &self.cfg
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn advance(&mut self, dt: f64, rng: &mut SimRng) {
        match &mut self.state {
            MoverState::Waypoint(movers) => {
                for (m, p) in movers.iter_mut().zip(self.positions.iter_mut()) {
                    step_random_waypoint(m, dt, &self.cfg, rng);
                    *p = m.pos;
                }
            }
            MoverState::Nomadic(groups) => step_nomadic(groups, &mut self.positions, dt, &self.cfg, rng),
            MoverState::Static => {}
        }
    }

    /// Reference point of the group `node` belongs to, for nomadic mobility.
    pub fn group_reference(&self, node: usize) -> Option<Position> {
        match &self.state {
            MoverState::Nomadic(g) => Some(g.refs[g.membership[node]].pos),
            _ => None,
        }
    }
}
