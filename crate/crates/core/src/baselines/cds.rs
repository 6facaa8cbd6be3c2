use std::collections::VecDeque;

use crate::ids::NodeId;
use crate::sim::topology::components;
use crate::sim::Adjacency;

/// Greedy connected dominating set, per connected component. Dominators are
/// picked by most uncovered closed-neighbourhood members (ties: lowest id),
/// then joined through shortest paths. Returns a membership mask.
pub fn greedy_cds(adj: &Adjacency) -> Vec<bool> {
    let n = adj.node_count();
    let mut member = vec![false; n];
    for comp in components(adj) {
        if comp.len() == 1 {
            member[comp[0].idx()] = true;
            continue;
        }
        let mut covered = vec![false; n];
        let mut left = comp.len();
        let mut doms = Vec::new();
        while left > 0 {
            let gain = |v: NodeId| {
                usize::from(!covered[v.idx()]) + adj.neighbors(v).iter().filter(|u| !covered[u.idx()]).count()
            };
            // comp is in ascending id order, so max_by_key's last-wins needs a reversed scan
            let best = comp.iter().rev().copied().max_by_key(|&v| gain(v)).expect("non-empty component");
            doms.push(best);
            for v in std::iter::once(best).chain(adj.neighbors(best).iter().copied()) {
                if !covered[v.idx()] {
                    covered[v.idx()] = true;
                    left -= 1;
                }
            }
        }
        connect(adj, &doms, &mut member);
    }
    member
}

/// Adds `doms` and the interiors of shortest paths linking them, growing one
/// tree from the first dominator.
fn connect(adj: &Adjacency, doms: &[NodeId], member: &mut [bool]) {
    let n = adj.node_count();
    let mut in_tree = vec![false; n];
    in_tree[doms[0].idx()] = true;
    member[doms[0].idx()] = true;
    let mut is_dom = vec![false; n];
    for d in doms {
        is_dom[d.idx()] = true;
    }
    let mut remaining = doms.len() - 1;
    while remaining > 0 {
        // multi-source BFS from the tree to the nearest unjoined dominator
        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        let mut seen = in_tree.clone();
        let mut q: VecDeque<NodeId> = (0..n).filter(|&i| in_tree[i]).map(NodeId::from).collect();
        let mut hit = None;
        'bfs: while let Some(u) = q.pop_front() {
            for &v in adj.neighbors(u) {
                if seen[v.idx()] {
                    continue;
                }
                seen[v.idx()] = true;
                parent[v.idx()] = Some(u);
                if is_dom[v.idx()] {
                    hit = Some(v);
                    break 'bfs;
                }
                q.push_back(v);
            }
        }
        let mut v = hit.expect("dominators of one component are mutually reachable");
        loop {
            if in_tree[v.idx()] {
                break;
            }
            in_tree[v.idx()] = true;
            member[v.idx()] = true;
            if is_dom[v.idx()] {
                remaining -= 1;
            }
            match parent[v.idx()] {
                Some(p) => v = p,
                None => break,
            }
        }
    }
}

/// Every node is a member or adjacent to one.
pub fn is_dominating(adj: &Adjacency, member: &[bool]) -> bool {
    adj.nodes().all(|v| member[v.idx()] || adj.neighbors(v).iter().any(|u| member[u.idx()]))
}

/// Dominating, and the members of each component induce a connected subgraph.
pub fn is_connected_dominating(adj: &Adjacency, member: &[bool]) -> bool {
    if !is_dominating(adj, member) {
        return false;
    }
    components(adj).iter().all(|comp| {
        let members: Vec<NodeId> = comp.iter().copied().filter(|v| member[v.idx()]).collect();
        let Some(&first) = members.first() else { return false };
        let mut seen = vec![false; adj.node_count()];
        seen[first.idx()] = true;
        let mut q = VecDeque::from([first]);
        let mut reached = 1;
        while let Some(u) = q.pop_front() {
            for &v in adj.neighbors(u) {
                if member[v.idx()] && !seen[v.idx()] {
                    seen[v.idx()] = true;
                    reached += 1;
                    q.push_back(v);
                }
            }
        }
        reached == members.len()
    })
}

/// Backbone node each node sends lookups through: itself if a member,
/// otherwise its lowest-id member neighbour.
pub fn dominators(adj: &Adjacency, member: &[bool]) -> Vec<Option<NodeId>> {
    adj.nodes()
        .map(|v| {
            if member[v.idx()] {
                Some(v)
            } else {
                adj.neighbors(v).iter().copied().filter(|u| member[u.idx()]).min()
            }
        })
        .collect()
}
