use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Abstract radio: unit-disk links with independent per-hop loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub radio_range_m: f64,
    pub per_link_delivery_prob: f64,
    pub per_hop_latency: SimTime,
    /// Congestion coefficient `c`; each link's delivery probability is divided
    /// by `1 + c * concurrent_local_sends`. Zero disables the model.
    pub congestion: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            radio_range_m: 300.0,
            per_link_delivery_prob: 0.95,
            per_hop_latency: SimTime::from_millis(100),
            congestion: 0.0,
        }
    }
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.radio_range_m > 0.0) {
            return Err("network.radio_range_m must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.per_link_delivery_prob) {
            return Err("network.per_link_delivery_prob must lie in [0, 1]".into());
        }
        if self.congestion < 0.0 {
            return Err("network.congestion must be non-negative".into());
        }
        Ok(())
    }

    pub fn link_prob(&self, concurrent_local_sends: usize) -> f64 {
        self.per_link_delivery_prob / (1.0 + self.congestion * concurrent_local_sends as f64)
    }

    /// Probability that a message survives all `hops` links.
    pub fn path_prob(&self, hops: u32, concurrent_local_sends: usize) -> f64 {
        self.link_prob(concurrent_local_sends).powi(hops as i32)
    }

    pub fn latency(&self, hops: u32) -> SimTime {
        SimTime(self.per_hop_latency.as_millis() * hops as u64)
    }
}

/// Fate of one message, decided when it is sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Delivered { at: SimTime, hops: u32 },
    /// Silent loss. `hops` is `None` when no route existed.
    Lost { hops: Option<u32> },
}

impl Delivery {
    pub fn is_delivered(self) -> bool {
        matches!(self, Delivery::Delivered { .. })
    }
}
