//! Communication topologies, cuts and cut trees.
//!
//! A [`WeightedGraph`] is the physical network: every undirected link carries
//! the same bandwidth in both directions and every node has a per-gradient
//! compute time (`f64::INFINITY` marks a pure switch). Algorithms work on the
//! [`UndirectedView`], where each link is one weighted edge.

mod flow;
mod gomory_hu;
mod multigraph;
mod peeling;
pub mod topology;

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

pub use gomory_hu::{gomory_hu_tree, min_s_cut, GhEdge, GomoryHuTree};
pub use multigraph::{unit_multigraph, MultiEdge, UnitMultigraph, DEFAULT_MAX_SCALE};
pub use peeling::{leaf_branch_peeling, MetaTree, PeelStep, Peeling};
pub use topology::{build_graph, LinkSpec, NodeSpec, TopologySpec};

/// External node identifier as written in topology files.
pub type NodeId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph is disconnected: node {0} is unreachable from node {1}")]
    Disconnected(NodeId, NodeId),
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("link references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("link {0}-{1} is a self-loop")]
    SelfLoop(NodeId, NodeId),
    #[error("link {a}-{b} has non-positive or non-finite bandwidth {bandwidth}")]
    BadBandwidth { a: NodeId, b: NodeId, bandwidth: f64 },
    #[error("link {a}-{b} has invalid latency {latency}")]
    BadLatency { a: NodeId, b: NodeId, latency: f64 },
    #[error("node {id} has invalid compute time {h}")]
    BadComputeTime { id: NodeId, h: f64 },
    #[error("link {a}-{b} declared twice with different bandwidth or latency")]
    AsymmetricLink { a: NodeId, b: NodeId },
    #[error("link {a}-{b} declared twice")]
    DuplicateLink { a: NodeId, b: NodeId },
    #[error("source and sink must differ (both {0})")]
    SameEndpoints(usize),
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("edge {0} is invalid: {1}")]
    BadEdge(usize, String),
    #[error("input is not a tree: {0}")]
    NotATree(String),
    #[error("no integral scale up to {max_scale}; best effort has relative error {max_relative_error:e}")]
    InexactScale { max_scale: u64, max_relative_error: f64 },
    #[error("at least two terminals are required")]
    TooFewTerminals,
}

/// One physical link between node indices `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub bandwidth: f64,
    pub latency: f64,
}

/// A directed arc. Arc `2k` runs `a -> b` of link `k`, arc `2k + 1` runs back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub link: usize,
    pub bandwidth: f64,
    pub latency: f64,
}

/// Connected, symmetric communication topology.
///
/// Node indices `0..n` follow ascending external id, so "lowest id first" and
/// "lowest index first" are the same ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<NodeId>,
    compute: Vec<f64>,
    links: Vec<Link>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    /// Builds a graph from `(id, h)` pairs and `(a, b, bandwidth, latency)` links.
    pub fn new(
        nodes: &[(NodeId, f64)],
        links: &[(NodeId, NodeId, f64, f64)],
    ) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut sorted: Vec<(NodeId, f64)> = nodes.to_vec();
        sorted.sort_by_key(|&(id, _)| id);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(GraphError::DuplicateNode(w[0].0));
            }
        }
        for &(id, h) in &sorted {
            if h.is_nan() || h <= 0.0 {
                return Err(GraphError::BadComputeTime { id, h });
            }
        }
        let ids: Vec<NodeId> = sorted.iter().map(|&(id, _)| id).collect();
        let compute: Vec<f64> = sorted.iter().map(|&(_, h)| h).collect();
        let index = |id: NodeId| ids.binary_search(&id).map_err(|_| GraphError::UnknownNode(id));

        let mut out: Vec<Link> = Vec::with_capacity(links.len());
        let mut seen: std::collections::HashMap<(usize, usize), (usize, bool)> =
            std::collections::HashMap::new();
        for &(a, b, bandwidth, latency) in links {
            let (ia, ib) = (index(a)?, index(b)?);
            if ia == ib {
                return Err(GraphError::SelfLoop(a, b));
            }
            if !(bandwidth.is_finite() && bandwidth > 0.0) {
                return Err(GraphError::BadBandwidth { a, b, bandwidth });
            }
            if !(latency.is_finite() && latency >= 0.0) {
                return Err(GraphError::BadLatency { a, b, latency });
            }
            let key = (ia.min(ib), ia.max(ib));
            let forward = ia < ib;
            if let Some(&(k, first_forward)) = seen.get(&key) {
                let prev = out[k];
                if prev.bandwidth != bandwidth || prev.latency != latency {
                    return Err(GraphError::AsymmetricLink { a, b });
                }
                if first_forward == forward {
                    return Err(GraphError::DuplicateLink { a, b });
                }
                // the reverse arc of an existing link: symmetric redeclaration
                continue;
            }
            seen.insert(key, (out.len(), forward));
            out.push(Link { a: key.0, b: key.1, bandwidth, latency });
        }

        let mut adj = vec![Vec::new(); ids.len()];
        for (k, l) in out.iter().enumerate() {
            adj[l.a].push((l.b, k));
            adj[l.b].push((l.a, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = WeightedGraph { ids, compute, links: out, adj };
        g.check_connected()?;
        Ok(g)
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let seen = bfs_reach(self.n(), 0, |u| self.adj[u].iter().map(|&(v, _)| v));
        match seen.iter().position(|&s| !s) {
            Some(v) => Err(GraphError::Disconnected(self.ids[v], self.ids[0])),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> NodeId {
        self.ids[index]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Seconds per stochastic gradient; infinite for switches.
    pub fn compute_time(&self, index: usize) -> f64 {
        self.compute[index]
    }

    pub fn compute_times(&self) -> &[f64] {
        &self.compute
    }

    pub fn is_switch(&self, index: usize) -> bool {
        self.compute[index].is_infinite()
    }

    /// Indices of nodes with finite compute time.
    pub fn workers(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.is_switch(i)).collect()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// `(neighbor, link)` pairs sorted by neighbor.
    pub fn neighbors(&self, index: usize) -> &[(usize, usize)] {
        &self.adj[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.adj[index].len()
    }

    pub fn arc_count(&self) -> usize {
        2 * self.links.len()
    }

    pub fn arc(&self, id: usize) -> Arc {
        let l = self.links[id / 2];
        let (from, to) = if id.is_multiple_of(2) { (l.a, l.b) } else { (l.b, l.a) };
        Arc { id, from, to, link: id / 2, bandwidth: l.bandwidth, latency: l.latency }
    }

    /// Arc id for travelling over `link` starting at `from`.
    pub fn arc_from(&self, link: usize, from: usize) -> usize {
        if self.links[link].a == from {
            2 * link
        } else {
            2 * link + 1
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = Arc> + '_ {
        (0..self.arc_count()).map(|id| self.arc(id))
    }

    pub fn min_bandwidth(&self) -> f64 {
        self.links.iter().map(|l| l.bandwidth).fold(f64::INFINITY, f64::min)
    }

    pub fn max_latency(&self) -> f64 {
        self.links.iter().map(|l| l.latency).fold(0.0, f64::max)
    }

    pub fn undirected(&self) -> UndirectedView {
        let edges = self.links.iter().map(|l| (l.a, l.b, l.bandwidth)).collect();
        UndirectedView::from_parts(self.n(), edges)
    }

    /// Breadth-first tree from `root`, visiting neighbors by ascending index.
    /// Returns `parent[v] = Some((parent, link))`, `None` for the root.
    pub fn bfs_tree(&self, root: usize) -> Vec<Option<(usize, usize)>> {
        let mut parent = vec![None; self.n()];
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, link) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, link));
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    /// Node with the smallest hop eccentricity; lowest index on ties.
    pub fn center(&self) -> usize {
        (0..self.n())
            .min_by_key(|&r| {
                let depth = hop_depths(&self.bfs_tree(r), r);
                (depth.into_iter().max().unwrap_or(0), r)
            })
            .unwrap_or(0)
    }
}

/// Hop depth of every node in a parent-pointer tree rooted at `root`.
pub(crate) fn hop_depths(parent: &[Option<(usize, usize)>], root: usize) -> Vec<usize> {
    let n = parent.len();
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    for v in 0..n {
        let mut chain = Vec::new();
        let mut u = v;
        while depth[u] == usize::MAX {
            chain.push(u);
            match parent[u] {
                Some((p, _)) => u = p,
                None => break,
            }
        }
        let mut d = if depth[u] == usize::MAX { 0 } else { depth[u] };
        for &w in chain.iter().rev() {
            d += 1;
            depth[w] = d;
        }
    }
    depth
}

pub(crate) fn bfs_reach<I, F>(n: usize, start: usize, mut next: F) -> Vec<bool>
where
    F: FnMut(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; n];
    if n == 0 {
        return seen;
    }
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for v in next(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Undirected weighted graph over node indices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct UndirectedView {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl UndirectedView {
    /// Validated construction; parallel edges are allowed, connectivity is not required.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        for (k, &(u, v, w)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(GraphError::BadEdge(k, "endpoint out of range".into()));
            }
            if u == v {
                return Err(GraphError::BadEdge(k, "self-loop".into()));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadEdge(k, format!("weight {w}")));
            }
        }
        Ok(Self::from_parts(n, edges))
    }

    fn from_parts(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (k, &(u, v, _)) in edges.iter().enumerate() {
            adj[u].push((v, k));
            adj[v].push((u, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        UndirectedView { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adj[u]
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || bfs_reach(self.n, 0, |u| self.adj[u].iter().map(|&(v, _)| v)).iter().all(|&s| s)
    }

    /// Total weight of edges with exactly one endpoint in `side`.
    pub fn cut_value(&self, side: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| side[u] != side[v])
            .map(|&(_, _, w)| w)
            .sum()
    }
}

/// Outcome of a minimum s-t cut: `side` holds `s` and not `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutResult {
    pub value: f64,
    pub side: Vec<usize>,
}

/// Exact minimum s-t cut; the returned side is the largest minimum source side.
pub fn max_flow_min_cut(g: &UndirectedView, s: usize, t: usize) -> Result<CutResult, GraphError> {
    if s >= g.n() {
        return Err(GraphError::IndexOutOfRange(s));
    }
    if t >= g.n() {
        return Err(GraphError::IndexOutOfRange(t));
    }
    if s == t {
        return Err(GraphError::SameEndpoints(s));
    }
    let solver = flow::CutSolver::new(g);
    let (value, side) = solver.min_cut(s, t);
    Ok(CutResult { value, side: (0..g.n()).filter(|&i| side[i]).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn five_node() -> WeightedGraph {
        let nodes: Vec<(NodeId, f64)> = (1..=5).map(|i| (i, 1.0)).collect();
        let links = [(1, 2, 2.0, 0.0), (2, 3, 2.0, 0.0), (4, 5, 1.0, 0.0), (1, 5, 1.0, 0.0), (2, 5, 1.0, 0.0)];
        WeightedGraph::new(&nodes, &links).unwrap()
    }

    #[test]
    fn five_node_has_ten_arcs() {
        let g = five_node();
        assert_eq!(g.arc_count(), 10);
        for arc in g.arcs() {
            let back = g.arc(arc.id ^ 1);
            assert_eq!((back.from, back.to), (arc.to, arc.from));
            assert_eq!(back.bandwidth, arc.bandwidth);
        }
    }

    #[test]
    fn single_node_is_valid() {
        let g = WeightedGraph::new(&[(7, 2.0)], &[]).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.arc_count(), 0);
    }

    #[test]
    fn two_components_rejected() {
        let err = WeightedGraph::new(&[(1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)], &[(1, 2, 1.0, 0.0), (3, 4, 1.0, 0.0)]);
        assert!(matches!(err, Err(GraphError::Disconnected(3, 1))));
    }

    #[test]
    fn link_validation() {
        let nodes = [(1, 1.0), (2, 1.0)];
        assert!(matches!(
            WeightedGraph::new(&nodes, &[(1, 2, 0.0, 0.0)]),
            Err(GraphError::BadBandwidth { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(&nodes, &[(1, 2, 1.0, 0.0), (2, 1, 2.0, 0.0)]),
            Err(GraphError::AsymmetricLink { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(&nodes, &[(1, 2, 1.0, 0.0), (1, 2, 1.0, 0.0)]),
            Err(GraphError::DuplicateLink { .. })
        ));
        let g = WeightedGraph::new(&nodes, &[(1, 2, 1.0, 0.0), (2, 1, 1.0, 0.0)]).unwrap();
        assert_eq!(g.links().len(), 1);
        assert!(matches!(WeightedGraph::new(&nodes, &[(1, 1, 1.0, 0.0)]), Err(GraphError::SelfLoop(..))));
        assert!(matches!(WeightedGraph::new(&[(1, 0.0)], &[]), Err(GraphError::BadComputeTime { .. })));
        assert!(WeightedGraph::new(&[(1, f64::INFINITY), (2, 1.0)], &[(1, 2, 1.0, 0.0)]).is_ok());
    }

    #[test]
    fn five_node_cuts() {
        let g = five_node().undirected();
        let c = max_flow_min_cut(&g, 3, 4).unwrap();
        assert_eq!(c.value, 1.0);
        assert_eq!(c.side, vec![3]);
        assert_eq!(max_flow_min_cut(&g, 0, 1).unwrap().value, 3.0);
        assert!(matches!(max_flow_min_cut(&g, 2, 2), Err(GraphError::SameEndpoints(2))));
    }

    #[test]
    fn triangle_cut_is_two() {
        let g = UndirectedView::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    assert_eq!(max_flow_min_cut(&g, s, t).unwrap().value, 2.0);
                }
            }
        }
    }

    #[test]
    fn center_of_path() {
        let nodes: Vec<(NodeId, f64)> = (1..=5).map(|i| (i, 1.0)).collect();
        let links: Vec<_> = (1..5).map(|i| (i, i + 1, 1.0, 0.0)).collect();
        let g = WeightedGraph::new(&nodes, &links).unwrap();
        assert_eq!(g.center(), 2);
    }
}
