//! Discrete-event MANET substrate: mobility, connectivity, hop distances,
//! lossy message delivery and the event clock.

pub mod events;
pub mod link;
pub mod mobility;
pub mod topology;
pub mod world;

pub use events::EventQueue;
pub use link::{Delivery, LinkModel};
pub use mobility::{Mobility, MobilityConfig, MobilityModel, Position};
pub use topology::{connectivity, hop_distances, Adjacency, HopTable};
pub use world::{fraction_reachable, reachability_report, World, DEFAULT_TICK};
