use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Index of a simulated mobile node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Logical service (front-end or back-end), independent of where replicas run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServiceId(pub u16);

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One end of a dependence: a client on a node, or a service replica hosted on a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    Client(NodeId),
    Service { service: ServiceId, host: NodeId },
}

impl Endpoint {
    /// Node whose monitor observes this endpoint's traffic.
    pub fn host(self) -> NodeId {
        match self {
            Endpoint::Client(n) => n,
            Endpoint::Service { host, .. } => host,
        }
    }

    pub(crate) const MIN: Endpoint = Endpoint::Client(NodeId(0));
    pub(crate) const MAX: Endpoint = Endpoint::Service {
        service: ServiceId(u16::MAX),
        host: NodeId(u32::MAX),
    };
}

/// Textual form: `c<node>` for clients, `s<service>@<node>` for service replicas.
impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Client(n) => write!(f, "c{n}"),
            Endpoint::Service { service, host } => write!(f, "s{service}@{host}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed endpoint `{0}`")]
pub struct ParseEndpointError(pub String);

impl FromStr for Endpoint {
    type Err = ParseEndpointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseEndpointError(s.to_string());
        if let Some(rest) = s.strip_prefix('c') {
            let n = rest.parse().map_err(|_| bad())?;
            return Ok(Endpoint::Client(NodeId(n)));
        }
        if let Some(rest) = s.strip_prefix('s') {
            let (svc, host) = rest.split_once('@').ok_or_else(bad)?;
            return Ok(Endpoint::Service {
                service: ServiceId(svc.parse().map_err(|_| bad())?),
                host: NodeId(host.parse().map_err(|_| bad())?),
            });
        }
        Err(bad())
    }
}
