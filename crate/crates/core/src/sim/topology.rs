//! Unit-disk connectivity and BFS hop distances.

use std::collections::VecDeque;

use crate::ids::NodeId;
use crate::sim::mobility::Position;

/// Symmetric neighbor lists; each list is sorted by node id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Adjacency {
    nbrs: Vec<Vec<NodeId>>,
}

impl Adjacency {
    pub fn with_nodes(n: usize) -> Self {
        Adjacency { nbrs: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adj = Self::with_nodes(n);
        for &(a, b) in edges {
            adj.add_edge(NodeId(a), NodeId(b));
        }
        adj
    }

    /// Adds an undirected edge. Self-loops and duplicates are ignored.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) {
        if a == b || self.nbrs[a.idx()].contains(&b) {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            let list = &mut self.nbrs[x.idx()];
            let at = list.partition_point(|&n| n < y);
            list.insert(at, y);
        }
    }

    pub fn node_count(&self) -> usize {
        self.nbrs.len()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.nbrs[n.idx()]
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.nbrs[n.idx()].len()
    }

    pub fn connected(&self, a: NodeId, b: NodeId) -> bool {
        self.nbrs[a.idx()].binary_search(&b).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nbrs.len()).map(NodeId::from)
    }

    pub fn edge_count(&self) -> usize {
        self.nbrs.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.nbrs.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.nbrs.len() as f64
    }
}

/// Links every pair of nodes within `radio_range` metres (closed ball).
pub fn connectivity(positions: &[Position], radio_range: f64) -> Adjacency {
    let n = positions.len();
    let mut nbrs = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].dist(positions[j]) <= radio_range {
                nbrs[i].push(NodeId::from(j));
                nbrs[j].push(NodeId::from(i));
            }
        }
    }
    // pushes happen in increasing id order, so lists are already sorted
    Adjacency { nbrs }
}

/// Shortest-path hop counts from `src`; `None` marks unreachable nodes.
pub fn hop_distances(adj: &Adjacency, src: NodeId) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.node_count()];
    dist[src.idx()] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.idx()].unwrap_or(0);
        for &v in adj.neighbors(u) {
            if dist[v.idx()].is_none() {
                dist[v.idx()] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs hop distances, one BFS row per node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HopTable {
    rows: Vec<Vec<Option<u32>>>,
}

impl HopTable {
    pub fn compute(adj: &Adjacency) -> Self {
        HopTable { rows: adj.nodes().map(|n| hop_distances(adj, n)).collect() }
    }

    pub fn row(&self, from: NodeId) -> &[Option<u32>] {
        &self.rows[from.idx()]
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> Option<u32> {
        self.rows[from.idx()][to.idx()]
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    /// Largest finite distance between any two nodes.
    pub fn diameter(&self) -> u32 {
        self.rows.iter().flatten().filter_map(|d| *d).max().unwrap_or(0)
    }
}

/// Connected-component label per node; labels are the smallest member id.
pub fn component_labels(adj: &Adjacency) -> Vec<NodeId> {
    let n = adj.node_count();
    let mut label: Vec<Option<NodeId>> = vec![None; n];
    for start in adj.nodes() {
        if label[start.idx()].is_some() {
            continue;
        }
        label[start.idx()] = Some(start);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.neighbors(u) {
                if label[v.idx()].is_none() {
                    label[v.idx()] = Some(start);
                    queue.push_back(v);
                }
            }
        }
    }
    label.into_iter().map(|l| l.expect("every node labelled")).collect()
}

/// Members of each connected component, components ordered by smallest id.
pub fn components(adj: &Adjacency) -> Vec<Vec<NodeId>> {
    let labels = component_labels(adj);
    let mut out: Vec<Vec<NodeId>> = Vec::new();
    let mut slot = vec![usize::MAX; adj.node_count()];
    for n in adj.nodes() {
        let l = labels[n.idx()].idx();
        if slot[l] == usize::MAX {
            slot[l] = out.len();
            out.push(Vec::new());
        }
        out[slot[l]].push(n);
    }
    out
}

/// BFS predecessor tree rooted at `src` (`None` for the root and unreachable nodes).
pub fn bfs_parents(adj: &Adjacency, src: NodeId) -> Vec<Option<NodeId>> {
    let mut parent = vec![None; adj.node_count()];
    let mut seen = vec![false; adj.node_count()];
    seen[src.idx()] = true;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in adj.neighbors(u) {
            if !seen[v.idx()] {
                seen[v.idx()] = true;
                parent[v.idx()] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

/// A shortest path `src ..= dst`, preferring low-id neighbors at each step.
pub fn shortest_path(adj: &Adjacency, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
    if src == dst {
        return Some(vec![src]);
    }
    let parent = bfs_parents(adj, src);
    parent[dst.idx()]?;
    let mut path = vec![dst];
    let mut cur = dst;
    while let Some(p) = parent[cur.idx()] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Some(path)
}
