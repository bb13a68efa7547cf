//! Edge-disjoint Steiner tree packings over a unit multigraph.
//!
//! Every tree is rooted at the pivot and stored as child-to-parent arcs on a
//! specific unit copy (`lane`) of a multigraph edge. Two disjointness notions
//! are supported:
//!
//! * [`PackingKind::Undirected`]: a unit copy belongs to at most one tree.
//! * [`PackingKind::Bidirected`]: a unit copy may serve two trees, one per
//!   direction. Reduce traffic flows child to parent and broadcast traffic
//!   parent to child, so each directed copy still carries a single stream per
//!   phase.

mod greedy;
mod special;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{gomory_hu_tree, UnitMultigraph};

pub use greedy::{greedy_packing, Heuristic};
pub use special::{recognize, Topology};

/// Cap on extracted trees when the cut is very large.
pub const DEFAULT_MAX_TREES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("terminal set is empty")]
    NoTerminals,
    #[error("terminal {0} is out of range")]
    BadTerminal(usize),
    #[error("at least two terminals are required")]
    TooFewTerminals,
    #[error("topology not recognized for a specialized construction")]
    NotRecognized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingKind {
    Undirected,
    Bidirected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Auto,
    Greedy,
    Specialized,
}

/// One tree edge, stored with its orientation toward the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeArc {
    pub child: usize,
    pub parent: usize,
    pub edge: usize,
    pub lane: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinerTree {
    pub root: usize,
    pub arcs: Vec<TreeArc>,
}

impl SteinerTree {
    /// Orients an undirected edge list `(a, b, edge, lane)` toward `root`.
    ///
    /// Edges not connected to the root are dropped.
    pub fn from_edges(root: usize, edges: &[(usize, usize, usize, u64)]) -> SteinerTree {
        let mut adj: HashMap<usize, Vec<(usize, usize, u64)>> = HashMap::new();
        for &(a, b, e, l) in edges {
            adj.entry(a).or_default().push((b, e, l));
            adj.entry(b).or_default().push((a, e, l));
        }
        let mut seen = HashSet::from([root]);
        let mut arcs = Vec::new();
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let mut next: Vec<_> = adj.get(&u).cloned().unwrap_or_default();
            next.sort_unstable();
            for (v, e, l) in next {
                if seen.insert(v) {
                    arcs.push(TreeArc { child: v, parent: u, edge: e, lane: l });
                    stack.push(v);
                }
            }
        }
        SteinerTree { root, arcs }
    }

    pub fn nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = std::iter::once(self.root).chain(self.arcs.iter().map(|a| a.child)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn parent_map(&self) -> HashMap<usize, &TreeArc> {
        self.arcs.iter().map(|a| (a.child, a)).collect()
    }

    /// Hop depth of each node; `None` if the arcs do not form a rooted tree.
    pub fn depths(&self) -> Option<HashMap<usize, usize>> {
        let parent = self.parent_map();
        if parent.len() != self.arcs.len() || parent.contains_key(&self.root) {
            return None;
        }
        let mut depth = HashMap::from([(self.root, 0usize)]);
        for a in &self.arcs {
            let mut chain = vec![a.child];
            let mut u = a.parent;
            while !depth.contains_key(&u) {
                if chain.len() > self.arcs.len() {
                    return None;
                }
                chain.push(u);
                u = parent.get(&u)?.parent;
            }
            let mut d = depth[&u];
            for &w in chain.iter().rev() {
                d += 1;
                depth.insert(w, d);
            }
        }
        Some(depth)
    }

    /// Longest root path in hops.
    pub fn depth(&self) -> usize {
        self.depths().map(|d| d.values().copied().max().unwrap_or(0)).unwrap_or(0)
    }

    /// Children of each node sorted ascending.
    pub fn children(&self) -> HashMap<usize, Vec<usize>> {
        let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
        for a in &self.arcs {
            out.entry(a.parent).or_default().push(a.child);
        }
        for list in out.values_mut() {
            list.sort_unstable();
        }
        out
    }

    /// Nodes ordered so every child precedes its parent.
    pub fn post_order(&self) -> Vec<usize> {
        let children = self.children();
        let mut order = Vec::new();
        let mut stack = vec![(self.root, false)];
        while let Some((u, expanded)) = stack.pop() {
            if expanded {
                order.push(u);
                continue;
            }
            stack.push((u, true));
            if let Some(cs) = children.get(&u) {
                for &c in cs.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreePacking {
    pub kind: PackingKind,
    pub terminals: Vec<usize>,
    pub pivot: usize,
    pub trees: Vec<SteinerTree>,
    /// Minimum S-cut of the multigraph; `None` when `|S| < 2`.
    pub alpha: Option<u64>,
    pub construction: String,
}

impl TreePacking {
    pub fn p(&self) -> usize {
        self.trees.len()
    }

    pub fn ratio(&self) -> Option<f64> {
        self.alpha.map(|a| self.p() as f64 / a as f64)
    }

    /// The same packing restricted to the listed trees.
    pub fn subset(&self, keep: &[usize]) -> TreePacking {
        TreePacking { trees: keep.iter().map(|&i| self.trees[i].clone()).collect(), ..self.clone() }
    }
}

/// Minimum S-cut of the multigraph in unit copies.
pub fn min_s_cut_multigraph(mg: &UnitMultigraph, terminals: &[usize]) -> Result<u64, PackingError> {
    let s = normalize_terminals(mg, terminals)?;
    if s.len() < 2 {
        return Err(PackingError::TooFewTerminals);
    }
    Ok(gomory_hu_tree(&mg.as_view()).min_s_cut(&s).round() as u64)
}

fn normalize_terminals(mg: &UnitMultigraph, terminals: &[usize]) -> Result<Vec<usize>, PackingError> {
    if terminals.is_empty() {
        return Err(PackingError::NoTerminals);
    }
    if let Some(&t) = terminals.iter().find(|&&t| t >= mg.n()) {
        return Err(PackingError::BadTerminal(t));
    }
    let mut s = terminals.to_vec();
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// Packs Steiner trees for `terminals`.
///
/// `Auto` uses a specialized construction when the multigraph is a star, a
/// uniform ring, 2-torus or complete graph with every node a terminal, and
/// otherwise the best greedy run. A single terminal yields zero trees: no
/// communication is needed.
pub fn pack_steiner_trees(
    mg: &UnitMultigraph,
    terminals: &[usize],
    strategy: Strategy,
) -> Result<TreePacking, PackingError> {
    pack_with_limit(mg, terminals, strategy, DEFAULT_MAX_TREES)
}

pub fn pack_with_limit(
    mg: &UnitMultigraph,
    terminals: &[usize],
    strategy: Strategy,
    max_trees: usize,
) -> Result<TreePacking, PackingError> {
    let s = normalize_terminals(mg, terminals)?;
    if s.len() == 1 {
        return Ok(TreePacking {
            kind: PackingKind::Undirected,
            pivot: s[0],
            terminals: s,
            trees: Vec::new(),
            alpha: None,
            construction: "trivial".into(),
        });
    }
    let alpha = min_s_cut_multigraph(mg, &s)?;
    let special = match strategy {
        Strategy::Greedy => None,
        _ => special::construct(mg, &s, max_trees),
    };
    let (kind, pivot, trees, construction) = match (special, strategy) {
        (Some(found), _) => found,
        (None, Strategy::Specialized) => return Err(PackingError::NotRecognized),
        (None, _) => {
            let mut best: Option<(PackingKind, Vec<SteinerTree>, &str)> = None;
            for (kind, heuristic, label) in [
                (PackingKind::Undirected, Heuristic::ShortestPath, "greedy_shortest_path"),
                (PackingKind::Undirected, Heuristic::Balanced, "greedy_balanced"),
                (PackingKind::Bidirected, Heuristic::ShortestPath, "greedy_directed_shortest_path"),
                (PackingKind::Bidirected, Heuristic::Balanced, "greedy_directed_balanced"),
                (PackingKind::Undirected, Heuristic::Spanning, "spanning_partition"),
            ] {
                let trees = greedy_packing(mg, &s, s[0], kind, heuristic, max_trees);
                if best.as_ref().is_none_or(|b| trees.len() > b.1.len()) {
                    best = Some((kind, trees, label));
                }
            }
            let (kind, trees, label) = best.expect("at least one heuristic ran");
            (kind, s[0], trees, label.to_string())
        }
    };
    Ok(TreePacking { kind, terminals: s, pivot, trees, alpha: Some(alpha), construction })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "failure", rename_all = "snake_case")]
pub enum PackingFailure {
    TerminalMismatch,
    PivotNotTerminal { pivot: usize },
    RootNotPivot { tree: usize, root: usize },
    UnknownEdge { tree: usize, edge: usize },
    EndpointMismatch { tree: usize, edge: usize, child: usize, parent: usize },
    LaneOutOfRange { tree: usize, edge: usize, lane: u64 },
    SharedInstance { edge: usize, lane: u64, first_tree: usize, second_tree: usize },
    NotATree { tree: usize },
    MissingTerminal { tree: usize, terminal: usize },
    ExceedsCut { p: usize, alpha: u64 },
    NoTrees,
}

impl fmt::Display for PackingFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PackingFailure::*;
        match self {
            TerminalMismatch => write!(f, "packing terminal set differs from the checked set"),
            PivotNotTerminal { pivot } => write!(f, "pivot {pivot} is not a terminal"),
            RootNotPivot { tree, root } => write!(f, "tree {tree} is rooted at {root}, not the pivot"),
            UnknownEdge { tree, edge } => write!(f, "tree {tree} uses unknown edge {edge}"),
            EndpointMismatch { tree, edge, child, parent } => {
                write!(f, "tree {tree}: edge {edge} does not join {child} and {parent}")
            }
            LaneOutOfRange { tree, edge, lane } => write!(f, "tree {tree}: edge {edge} has no copy {lane}"),
            SharedInstance { edge, lane, first_tree, second_tree } => {
                write!(f, "edge {edge} copy {lane} used by trees {first_tree} and {second_tree}")
            }
            NotATree { tree } => write!(f, "tree {tree} has a cycle or a node with two parents"),
            MissingTerminal { tree, terminal } => write!(f, "tree {tree} misses terminal {terminal}"),
            ExceedsCut { p, alpha } => write!(f, "{p} trees exceed the minimum S-cut {alpha}"),
            NoTrees => write!(f, "no trees although at least two terminals need to communicate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingReport {
    pub valid: bool,
    pub failures: Vec<PackingFailure>,
    pub p: usize,
    pub alpha: Option<u64>,
    pub ratio: Option<f64>,
    /// `ceil(alpha / 26)`, the guaranteed fraction of the cut.
    pub floor: Option<u64>,
    pub meets_floor: bool,
}

/// Checks disjointness, tree structure, coverage and `p <= alpha`.
pub fn verify_packing(packing: &TreePacking, mg: &UnitMultigraph, terminals: &[usize]) -> PackingReport {
    let mut failures = Vec::new();
    let mut s = terminals.to_vec();
    s.sort_unstable();
    s.dedup();
    if s != packing.terminals {
        failures.push(PackingFailure::TerminalMismatch);
    }
    if !s.contains(&packing.pivot) && !s.is_empty() {
        failures.push(PackingFailure::PivotNotTerminal { pivot: packing.pivot });
    }
    let mut owner: HashMap<(usize, u64, usize), usize> = HashMap::new();
    for (t, tree) in packing.trees.iter().enumerate() {
        if tree.root != packing.pivot {
            failures.push(PackingFailure::RootNotPivot { tree: t, root: tree.root });
        }
        for a in &tree.arcs {
            let Some(e) = mg.edges().get(a.edge) else {
                failures.push(PackingFailure::UnknownEdge { tree: t, edge: a.edge });
                continue;
            };
            let dir = if (e.u, e.v) == (a.child, a.parent) {
                0
            } else if (e.v, e.u) == (a.child, a.parent) {
                1
            } else {
                failures.push(PackingFailure::EndpointMismatch {
                    tree: t,
                    edge: a.edge,
                    child: a.child,
                    parent: a.parent,
                });
                continue;
            };
            if a.lane >= e.multiplicity {
                failures.push(PackingFailure::LaneOutOfRange { tree: t, edge: a.edge, lane: a.lane });
                continue;
            }
            let key = match packing.kind {
                PackingKind::Undirected => (a.edge, a.lane, 0),
                PackingKind::Bidirected => (a.edge, a.lane, dir),
            };
            if let Some(&first) = owner.get(&key) {
                failures.push(PackingFailure::SharedInstance {
                    edge: a.edge,
                    lane: a.lane,
                    first_tree: first,
                    second_tree: t,
                });
            } else {
                owner.insert(key, t);
            }
        }
        match tree.depths() {
            None => failures.push(PackingFailure::NotATree { tree: t }),
            Some(depth) => {
                for &v in &s {
                    if !depth.contains_key(&v) {
                        failures.push(PackingFailure::MissingTerminal { tree: t, terminal: v });
                    }
                }
            }
        }
    }
    let alpha = (s.len() >= 2).then(|| min_s_cut_multigraph(mg, &s).ok()).flatten();
    if let Some(a) = alpha {
        if packing.p() as u64 > a {
            failures.push(PackingFailure::ExceedsCut { p: packing.p(), alpha: a });
        }
        if packing.p() == 0 {
            failures.push(PackingFailure::NoTrees);
        }
    }
    let floor = alpha.map(|a| a.div_ceil(26));
    PackingReport {
        valid: failures.is_empty(),
        failures,
        p: packing.p(),
        alpha,
        ratio: alpha.map(|a| packing.p() as f64 / a as f64),
        floor,
        meets_floor: floor.is_none_or(|f| packing.p() as u64 >= f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Nodes 0, 1, 2, 3 stand for ids 1, 2, 5, 6; node 2 is the switch.
    fn switch_example() -> UnitMultigraph {
        UnitMultigraph::from_multiplicities(4, &[(0, 1, 2), (0, 3, 3), (0, 2, 1), (1, 2, 1)]).unwrap()
    }

    #[test]
    fn switch_example_packs_three() {
        let mg = switch_example();
        let s = [0, 1, 3];
        assert_eq!(min_s_cut_multigraph(&mg, &s).unwrap(), 3);
        let packing = pack_steiner_trees(&mg, &s, Strategy::Auto).unwrap();
        assert_eq!(packing.p(), 3);
        let report = verify_packing(&packing, &mg, &s);
        assert!(report.valid, "{:?}", report.failures);
        assert_eq!(report.ratio, Some(1.0));
        let through_switch = packing.trees.iter().filter(|t| t.nodes().contains(&2)).count();
        assert_eq!(through_switch, 1);
    }

    #[test]
    fn shared_instance_named() {
        let mg = switch_example();
        let s = [0, 1, 3];
        let tree = SteinerTree::from_edges(0, &[(0, 1, 0, 0), (0, 3, 1, 0)]);
        let packing = TreePacking {
            kind: PackingKind::Undirected,
            terminals: s.to_vec(),
            pivot: 0,
            trees: vec![tree.clone(), tree],
            alpha: Some(3),
            construction: "manual".into(),
        };
        let report = verify_packing(&packing, &mg, &s);
        assert!(!report.valid);
        assert!(report.failures.contains(&PackingFailure::SharedInstance {
            edge: 0,
            lane: 0,
            first_tree: 0,
            second_tree: 1
        }));
        assert!(report.failures[0].to_string().contains("edge 0"));
    }

    #[test]
    fn missing_terminal_reported() {
        let mg = switch_example();
        let s = [0, 1, 3];
        let packing = TreePacking {
            kind: PackingKind::Undirected,
            terminals: s.to_vec(),
            pivot: 0,
            trees: vec![SteinerTree::from_edges(0, &[(0, 1, 0, 0)])],
            alpha: Some(3),
            construction: "manual".into(),
        };
        let report = verify_packing(&packing, &mg, &s);
        assert_eq!(report.failures, vec![PackingFailure::MissingTerminal { tree: 0, terminal: 3 }]);
    }

    #[test]
    fn cycle_reported() {
        let mg = UnitMultigraph::from_multiplicities(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let tree = SteinerTree {
            root: 0,
            arcs: vec![
                TreeArc { child: 1, parent: 2, edge: 1, lane: 0 },
                TreeArc { child: 2, parent: 1, edge: 1, lane: 0 },
            ],
        };
        let packing = TreePacking {
            kind: PackingKind::Bidirected,
            terminals: vec![0, 1, 2],
            pivot: 0,
            trees: vec![tree],
            alpha: Some(2),
            construction: "manual".into(),
        };
        let report = verify_packing(&packing, &mg, &[0, 1, 2]);
        assert!(report.failures.contains(&PackingFailure::NotATree { tree: 0 }));
    }

    #[test]
    fn single_terminal_is_trivial() {
        let mg = switch_example();
        let packing = pack_steiner_trees(&mg, &[3], Strategy::Auto).unwrap();
        assert_eq!(packing.p(), 0);
        assert!(verify_packing(&packing, &mg, &[3]).valid);
        assert_eq!(min_s_cut_multigraph(&mg, &[3]), Err(PackingError::TooFewTerminals));
    }

    #[test]
    fn post_order_children_first() {
        let t = SteinerTree::from_edges(0, &[(0, 1, 0, 0), (1, 2, 1, 0), (0, 3, 2, 0)]);
        let order = t.post_order();
        let pos = |v: usize| order.iter().position(|&x| x == v).unwrap();
        assert!(pos(2) < pos(1) && pos(1) < pos(0) && pos(3) < pos(0));
        assert_eq!(t.depth(), 2);
    }
}
