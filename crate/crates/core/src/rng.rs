//! Independent random substreams derived from one master seed.
//!
//! Each concern draws from its own ChaCha stream, so switching the harvesting
//! method never perturbs mobility or workload draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility,
    Workload,
    Loss,
    Protocol,
    /// Loss draws for service calls, kept apart so harvesting traffic
    /// never shifts the workload.
    ServiceLoss,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Mobility => 1,
            Stream::Workload => 2,
            Stream::Loss => 3,
            Stream::Protocol => 4,
            Stream::ServiceLoss => 5,
        }
    }
}

pub fn stream(master_seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(which.id());
    rng
}
