use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ids::{NodeId, ServiceId};
use crate::sim::HopTable;

use super::WorkloadError;

/// Shape of the service system. Defaults follow the two-tier deployment of
/// 5 front-end and 20 back-end services, 5 replicas and 2 methods each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub front_end_services: usize,
    pub back_end_services: usize,
    pub replicas: usize,
    pub methods_per_service: usize,
    /// Edges per conversation, client call included.
    pub dg_size: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig { front_end_services: 5, back_end_services: 20, replicas: 5, methods_per_service: 2, dg_size: 4 }
    }
}

impl TopologyConfig {
    pub fn validate(&self, nodes: usize) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::Config(m));
        if self.front_end_services == 0 || self.methods_per_service == 0 {
            return bad("topology needs at least one front-end method".into());
        }
        if self.dg_size < 1 {
            return bad("topology.dg_size must be at least 1".into());
        }
        if self.dg_size - 1 > self.back_end_services {
            return bad(format!(
                "topology.dg_size {} needs {} distinct back-end services, only {} configured",
                self.dg_size,
                self.dg_size - 1,
                self.back_end_services
            ));
        }
        if self.replicas == 0 || self.replicas > nodes {
            return bad(format!("topology.replicas must lie in 1..={nodes}"));
        }
        if self.front_end_services + self.back_end_services > u16::MAX as usize {
            return bad("too many services".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    FrontEnd,
    BackEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceInfo {
    pub id: ServiceId,
    pub tier: Tier,
    /// Distinct hosting nodes, ascending.
    pub replicas: Vec<NodeId>,
}

/// A client-invokable method and the fixed service chain its call cascades
/// through: the front-end service first, then distinct back-end services.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryMethod {
    pub service: ServiceId,
    pub method: usize,
    pub chain: Vec<ServiceId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceTopology {
    services: Vec<ServiceInfo>,
    methods: Vec<EntryMethod>,
}

impl ServiceTopology {
    /// Places replicas on distinct uniformly drawn nodes and draws each entry
    /// method's back-end chain. Front-end services get the lowest ids.
    pub fn generate<R: Rng + ?Sized>(cfg: &TopologyConfig, nodes: usize, rng: &mut R) -> Result<Self, WorkloadError> {
        cfg.validate(nodes)?;
        let total = cfg.front_end_services + cfg.back_end_services;
        let services = (0..total)
            .map(|i| {
                let mut replicas: Vec<NodeId> =
                    index::sample(rng, nodes, cfg.replicas).into_iter().map(NodeId::from).collect();
                replicas.sort_unstable();
                let tier = if i < cfg.front_end_services { Tier::FrontEnd } else { Tier::BackEnd };
                ServiceInfo { id: ServiceId(i as u16), tier, replicas }
            })
            .collect();
        let back_end: Vec<ServiceId> = (cfg.front_end_services..total).map(|i| ServiceId(i as u16)).collect();
        let mut methods = Vec::new();
        for fe in 0..cfg.front_end_services {
            for method in 0..cfg.methods_per_service {
                let mut chain = vec![ServiceId(fe as u16)];
                chain.extend(back_end.choose_multiple(rng, cfg.dg_size - 1).copied());
                methods.push(EntryMethod { service: ServiceId(fe as u16), method, chain });
            }
        }
        Ok(ServiceTopology { services, methods })
    }

    /// Explicit construction, mainly for tests.
    pub fn from_parts(services: Vec<ServiceInfo>, methods: Vec<EntryMethod>) -> Self {
        ServiceTopology { services, methods }
    }

    pub fn services(&self) -> &[ServiceInfo] {
        &self.services
    }

    pub fn service(&self, id: ServiceId) -> &ServiceInfo {
        &self.services[id.0 as usize]
    }

    pub fn methods(&self) -> &[EntryMethod] {
        &self.methods
    }

    /// Replica of `service` nearest (in hops) to `caller`; ties go to the
    /// lowest node id. `None` if no replica is reachable.
    pub fn bind(&self, service: ServiceId, caller: NodeId, hops: &HopTable) -> Option<NodeId> {
        self.service(service)
            .replicas
            .iter()
            .filter_map(|&r| hops.get(caller, r).map(|h| (h, r)))
            .min()
            .map(|(_, r)| r)
    }

    /// `service,tier,replica_hosts` lines, hosts separated by spaces.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for s in &self.services {
            let hosts: Vec<String> = s.replicas.iter().map(|n| n.to_string()).collect();
            let tier = match s.tier {
                Tier::FrontEnd => "front_end",
                Tier::BackEnd => "back_end",
            };
            let _ = writeln!(out, "{},{tier},{}", s.id, hosts.join(" "));
        }
        out
    }
}
