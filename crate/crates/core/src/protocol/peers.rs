use rand::seq::SliceRandom;
use rand::Rng;

use super::PeerLimit;
use crate::ids::NodeId;
use crate::sim::HopTable;

/// Nodes other than `me` reachable within `max_hops`, in id order.
pub fn candidate_set(hops: &HopTable, me: NodeId, max_hops: u32) -> Vec<NodeId> {
    hops.row(me)
        .iter()
        .enumerate()
        .filter(|&(i, h)| i != me.idx() && h.is_some_and(|h| h >= 1 && h <= max_hops))
        .map(|(i, _)| NodeId::from(i))
        .collect()
}

/// Uniformly random subset of `candidates` of size `min(limit, |candidates|)`,
/// returned in id order.
pub fn select_peers<R: Rng + ?Sized>(candidates: &[NodeId], limit: PeerLimit, rng: &mut R) -> Vec<NodeId> {
    let k = limit.cap(candidates.len());
    let mut picked: Vec<NodeId> = candidates.choose_multiple(rng, k).copied().collect();
    picked.sort_unstable();
    picked
}
