//! Gossip-based harvesting of service dependence time series in mobile ad hoc
//! networks, together with the simulator, workload and comparison methods used
//! to evaluate it.

pub mod baselines;
pub mod harness;
pub mod ids;
pub mod protocol;
pub mod rng;
pub mod sim;
pub mod time;
pub mod timeseries;
pub mod workload;
