use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::protocol::{PeerLimit, ProtocolConfig, SizeModel};
use crate::sim::{LinkModel, MobilityConfig, MobilityModel};
use crate::time::SimTime;
use crate::timeseries::SlotLen;
use crate::workload::{TopologyConfig, WorkloadConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Harvest,
    Gossip,
    Dht,
    Dafn,
    Scalar,
}

impl MethodKind {
    pub const ALL: [MethodKind; 5] = [MethodKind::Harvest, MethodKind::Gossip, MethodKind::Dht, MethodKind::Dafn, MethodKind::Scalar];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Harvest => "harvest",
            MethodKind::Gossip => "gossip",
            MethodKind::Dht => "dht",
            MethodKind::Dafn => "dafn",
            MethodKind::Scalar => "scalar",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ConfigError(format!("method: unknown method `{s}`")))
    }
}

/// Base preset a scenario file starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Squads moving as groups (nomadic community mobility).
    Military,
    /// Independent movers (random waypoint mobility).
    Firefighting,
}

impl FromStr for ScenarioKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "military" => Ok(ScenarioKind::Military),
            "firefighting" => Ok(ScenarioKind::Firefighting),
            _ => bad(format!("scenario: unknown scenario `{s}` (expected military or firefighting)")),
        }
    }
}

/// Whose conversations are analyzed. Written `"all"` or a node number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScopeRepr", into = "ScopeRepr")]
pub enum AnalysisScope {
    AllClients,
    Client(NodeId),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScopeRepr {
    Node(u32),
    Word(String),
}

impl TryFrom<ScopeRepr> for AnalysisScope {
    type Error = String;

    fn try_from(r: ScopeRepr) -> Result<Self, String> {
        match r {
            ScopeRepr::Node(n) => Ok(AnalysisScope::Client(NodeId(n))),
            ScopeRepr::Word(w) if w == "all" => Ok(AnalysisScope::AllClients),
            ScopeRepr::Word(w) => Err(format!("expected a node number or \"all\", got `{w}`")),
        }
    }
}

impl From<AnalysisScope> for ScopeRepr {
    fn from(s: AnalysisScope) -> Self {
        match s {
            AnalysisScope::AllClients => ScopeRepr::Word("all".into()),
            AnalysisScope::Client(n) => ScopeRepr::Node(n.0),
        }
    }
}

impl AnalysisScope {
    pub fn includes(self, client: NodeId) -> bool {
        match self {
            AnalysisScope::AllClients => true,
            AnalysisScope::Client(n) => n == client,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub radio_range_m: f64,
    pub per_link_delivery_prob: f64,
    pub per_hop_latency_s: f64,
    pub congestion: f64,
}

impl NetworkConfig {
    pub fn link_model(&self) -> LinkModel {
        LinkModel {
            radio_range_m: self.radio_range_m,
            per_link_delivery_prob: self.per_link_delivery_prob,
            per_hop_latency: SimTime::from_secs_f64(self.per_hop_latency_s),
            congestion: self.congestion,
        }
    }
}

/// Synchronization agent settings. The cycle period is not set here: it
/// follows from the harvest delay and the number of gossip cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub max_peers: PeerLimit,
    pub max_hop_distance: u32,
    pub transfer_slot_s: f64,
    /// Aging limit `T`; defaults to the harvest delay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aging_limit_s: Option<f64>,
    /// Defaults to the smaller of 60 s and the cycle period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confirm_timeout_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// Sliding window of the DAFN access-frequency tables.
    pub dafn_frequency_window_s: f64,
    /// How often each DAFN coordinator prunes duplicate replicas.
    pub dafn_prune_period_s: f64,
    /// SCALAR pushes increments to a requester after this many requests for
    /// the same source within the harvest delay.
    pub scalar_min_requests: usize,
    /// ... and only if the requester is at least this many hops away.
    pub scalar_min_hops: u32,
    pub scalar_push_period_s: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            dafn_frequency_window_s: 300.0,
            dafn_prune_period_s: 60.0,
            scalar_min_requests: 2,
            scalar_min_hops: 2,
            scalar_push_period_s: 1.0,
        }
    }
}

/// Common radio range of both presets. Independent movers fragment at this
/// range while groups stay internally connected.
pub const PRESET_RADIO_RANGE_M: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub nodes: usize,
    pub method: MethodKind,
    /// Time from a conversation's end to its analysis.
    pub harvest_delay_s: f64,
    /// Gossip cycles per harvest delay; zero disables gossip.
    pub gossip_cycles: u32,
    pub warmup_s: f64,
    pub duration_s: f64,
    pub retention_s: f64,
    pub monitor_slot_s: f64,
    pub tick_s: f64,
    pub analysis: AnalysisScope,
    pub mobility: MobilityConfig,
    pub network: NetworkConfig,
    pub topology: TopologyConfig,
    pub workload: WorkloadConfig,
    pub protocol: ProtocolSection,
    pub baselines: BaselineConfig,
    pub sizes: SizeModel,
}

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        let mobility = match kind {
            ScenarioKind::Military => MobilityConfig::nomadic_community(),
            ScenarioKind::Firefighting => MobilityConfig::random_waypoint(),
        };
        ScenarioConfig {
            scenario: kind,
            seed: 1,
            nodes: 50,
            method: MethodKind::Harvest,
            harvest_delay_s: 300.0,
            gossip_cycles: 32,
            warmup_s: 300.0,
            duration_s: 1200.0,
            retention_s: 1200.0,
            monitor_slot_s: 0.1,
            tick_s: 1.0,
            analysis: AnalysisScope::AllClients,
            mobility,
            network: NetworkConfig {
                radio_range_m: PRESET_RADIO_RANGE_M,
                per_link_delivery_prob: 0.95,
                per_hop_latency_s: 0.1,
                congestion: 0.0,
            },
            topology: TopologyConfig::default(),
            workload: WorkloadConfig::default(),
            protocol: ProtocolSection {
                max_peers: PeerLimit::Limited(1),
                max_hop_distance: 1,
                transfer_slot_s: 0.1,
                aging_limit_s: None,
                confirm_timeout_s: None,
            },
            baselines: BaselineConfig::default(),
            sizes: SizeModel::default(),
        }
    }

    pub fn military() -> Self {
        Self::preset(ScenarioKind::Military)
    }

    pub fn firefighting() -> Self {
        Self::preset(ScenarioKind::Firefighting)
    }

    /// Parses a scenario file. Keys not given keep the values of the preset
    /// named by `scenario` (default `military`).
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let user: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        let kind = match user.get("scenario") {
            None => ScenarioKind::Military,
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return bad("scenario: expected a string"),
        };
        let base = toml::Table::try_from(Self::preset(kind)).map_err(|e| ConfigError(e.to_string()))?;
        let merged = merge_tables(base, user);
        let cfg: ScenarioConfig = merged.try_into().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 2 {
            return bad("nodes must be at least 2");
        }
        for (name, v) in [
            ("harvest_delay_s", self.harvest_delay_s),
            ("warmup_s", self.warmup_s),
            ("duration_s", self.duration_s),
            ("retention_s", self.retention_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number"));
            }
        }
        if !(self.tick_s > 0.0) {
            return bad("tick_s must be positive");
        }
        if !(self.protocol.transfer_slot_s > 0.0) {
            return bad("protocol.transfer_slot_s must be positive");
        }
        let monitor = self.monitor_slot()?;
        let transfer = self.transfer_slot()?;
        if !monitor.commensurate_with(transfer) {
            return bad(format!(
                "protocol.transfer_slot_s {} and monitor_slot_s {} must divide one another",
                self.protocol.transfer_slot_s, self.monitor_slot_s
            ));
        }
        if let AnalysisScope::Client(n) = self.analysis {
            if n.idx() >= self.nodes {
                return bad(format!("analysis: node {n} does not exist"));
            }
        }
        if self.retention_s < self.harvest_delay_s + self.workload.response_timeout_s {
            return bad("retention_s must cover harvest_delay_s plus workload.response_timeout_s");
        }
        if let Some(t) = self.protocol.aging_limit_s {
            if !(t > 0.0) {
                return bad("protocol.aging_limit_s must be positive");
            }
        }
        if let Some(t) = self.protocol.confirm_timeout_s {
            if !(t > 0.0) {
                return bad("protocol.confirm_timeout_s must be positive");
            }
        }
        let b = &self.baselines;
        if !(b.dafn_frequency_window_s > 0.0) {
            return bad("baselines.dafn_frequency_window_s must be positive");
        }
        if !(b.dafn_prune_period_s > 0.0) {
            return bad("baselines.dafn_prune_period_s must be positive");
        }
        if !(b.scalar_push_period_s > 0.0) {
            return bad("baselines.scalar_push_period_s must be positive");
        }
        if b.scalar_min_requests == 0 {
            return bad("baselines.scalar_min_requests must be at least 1");
        }
        self.mobility.validate().map_err(ConfigError)?;
        if self.mobility.model == MobilityModel::NomadicCommunity && self.mobility.group_count > self.nodes {
            return bad("mobility.group_count must not exceed nodes");
        }
        self.network.link_model().validate().map_err(ConfigError)?;
        self.topology.validate(self.nodes).map_err(|e| ConfigError(e.to_string()))?;
        self.workload.validate().map_err(|e| ConfigError(e.to_string()))?;
        if let Some(p) = self.protocol_config()? {
            p.validate().map_err(|e| ConfigError(format!("protocol: {e}")))?;
        }
        Ok(())
    }

    pub fn monitor_slot(&self) -> Result<SlotLen, ConfigError> {
        SlotLen::from_secs_f64(self.monitor_slot_s).map_err(|_| ConfigError("monitor_slot_s must be positive".into()))
    }

    pub fn transfer_slot(&self) -> Result<SlotLen, ConfigError> {
        SlotLen::from_secs_f64(self.protocol.transfer_slot_s)
            .map_err(|_| ConfigError("protocol.transfer_slot_s must be positive".into()))
    }

    pub fn harvest_delay(&self) -> SimTime {
        SimTime::from_secs_f64(self.harvest_delay_s)
    }

    pub fn warmup(&self) -> SimTime {
        SimTime::from_secs_f64(self.warmup_s)
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs_f64(self.duration_s)
    }

    pub fn tick(&self) -> SimTime {
        SimTime::from_secs_f64(self.tick_s)
    }

    /// `harvest_delay / gossip_cycles`, or `None` when no cycle fits.
    pub fn cycle_period(&self) -> Option<SimTime> {
        let delay = self.harvest_delay().as_millis();
        if self.gossip_cycles == 0 || delay < self.gossip_cycles as u64 {
            return None;
        }
        Some(SimTime(delay / self.gossip_cycles as u64))
    }

    pub fn aging_limit(&self) -> SimTime {
        match self.protocol.aging_limit_s {
            Some(t) => SimTime::from_secs_f64(t),
            None => self.harvest_delay(),
        }
    }

    /// Agent configuration, or `None` when gossip is off.
    pub fn protocol_config(&self) -> Result<Option<ProtocolConfig>, ConfigError> {
        let Some(period) = self.cycle_period() else { return Ok(None) };
        let confirm_timeout = match self.protocol.confirm_timeout_s {
            Some(t) => SimTime::from_secs_f64(t),
            None => period.min(SimTime::from_secs(60)),
        };
        Ok(Some(ProtocolConfig {
            max_peers: self.protocol.max_peers,
            max_hop_distance: self.protocol.max_hop_distance,
            cycle_period: period,
            aging_limit: self.aging_limit(),
            transfer_slot_len: self.transfer_slot()?,
            confirm_timeout,
        }))
    }

    /// Gossip needs a protocol configuration even when disabled; this one is
    /// valid whatever the cycle count.
    pub(crate) fn protocol_config_or_idle(&self) -> Result<ProtocolConfig, ConfigError> {
        if let Some(p) = self.protocol_config()? {
            return Ok(p);
        }
        let aging = self.aging_limit().max(SimTime(1));
        Ok(ProtocolConfig {
            max_peers: self.protocol.max_peers,
            max_hop_distance: self.protocol.max_hop_distance,
            cycle_period: aging,
            aging_limit: aging,
            transfer_slot_len: self.transfer_slot()?,
            confirm_timeout: aging.min(SimTime::from_secs(60)),
        })
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::military()
    }
}

/// Overlays `top` on `base`, recursing into tables present in both.
fn merge_tables(mut base: toml::Table, top: toml::Table) -> toml::Table {
    for (k, v) in top {
        match (base.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => {
                base.insert(k, toml::Value::Table(merge_tables(b, t)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for cfg in [ScenarioConfig::military(), ScenarioConfig::firefighting()] {
            cfg.validate().unwrap();
            let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn partial_file_overrides_preset() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            scenario = "firefighting"
            method = "dafn"
            gossip_cycles = 4
            [protocol]
            max_peers = "unlimited"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mobility.model, MobilityModel::RandomWaypoint);
        assert_eq!(cfg.method, MethodKind::Dafn);
        assert_eq!(cfg.protocol.max_peers, PeerLimit::Unconstrained);
        assert_eq!(cfg.protocol.transfer_slot_s, 0.1);
        assert_eq!(cfg.cycle_period(), Some(SimTime::from_secs(75)));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ScenarioConfig::from_toml_str("[protocol]\ntransfer_slot_s = 0.25").unwrap_err();
        assert!(e.0.contains("transfer_slot_s"), "{e}");
        let e = ScenarioConfig::from_toml_str("[network]\nper_link_delivery_prob = 1.5").unwrap_err();
        assert!(e.0.contains("per_link_delivery_prob"), "{e}");
        let e = ScenarioConfig::from_toml_str("bogus = 1").unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
        let e = ScenarioConfig::from_toml_str("harvest_delay_s = 1500").unwrap_err();
        assert!(e.0.contains("retention_s"), "{e}");
        let e = ScenarioConfig::from_toml_str("analysis = 50").unwrap_err();
        assert!(e.0.contains("analysis"), "{e}");
    }

    #[test]
    fn cycle_period_and_timeout() {
        let mut cfg = ScenarioConfig::military();
        assert_eq!(cfg.cycle_period(), Some(SimTime::from_millis(9_375)));
        let p = cfg.protocol_config().unwrap().unwrap();
        assert_eq!(p.confirm_timeout, SimTime::from_millis(9_375));
        assert_eq!(p.aging_limit, SimTime::from_secs(300));
        cfg.gossip_cycles = 1;
        assert_eq!(cfg.protocol_config().unwrap().unwrap().confirm_timeout, SimTime::from_secs(60));
        cfg.gossip_cycles = 0;
        assert_eq!(cfg.protocol_config().unwrap(), None);
        cfg.validate().unwrap();
        cfg.gossip_cycles = 32;
        cfg.harvest_delay_s = 0.0;
        assert_eq!(cfg.cycle_period(), None);
        cfg.validate().unwrap();
    }
}
