//! Greedy extraction: grow a tree in the residual multigraph, consume its
//! copies, repeat until the terminals can no longer be connected.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{PackingKind, SteinerTree, TreeArc};
use crate::graph::UnitMultigraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Breadth-first tree from the root, pruned to the terminals.
    ShortestPath,
    /// Prim-style growth that attaches new nodes where the current tree has
    /// the fewest children, preferring edges with many remaining copies.
    Balanced,
    /// Exact spanning-tree packing by matroid partition; only used when the
    /// terminals are all nodes and the multigraph is small.
    Spanning,
}

/// Largest expanded multigraph handed to [`Heuristic::Spanning`].
pub const SPANNING_LIMIT: u64 = 1500;

struct Residual<'a> {
    mg: &'a UnitMultigraph,
    kind: PackingKind,
    used: Vec<[u64; 2]>,
}

impl Residual<'_> {
    /// Direction slot for travelling `from -> to` over edge `e`.
    fn slot(&self, e: usize, from: usize) -> usize {
        match self.kind {
            PackingKind::Undirected => 0,
            PackingKind::Bidirected => usize::from(self.mg.edges()[e].u != from),
        }
    }

    /// Copies left for a child `from` sending to its parent over `e`.
    fn available(&self, e: usize, from: usize) -> u64 {
        self.mg.edges()[e].multiplicity - self.used[e][self.slot(e, from)]
    }

    fn take(&mut self, e: usize, from: usize) -> u64 {
        let slot = self.slot(e, from);
        let lane = self.used[e][slot];
        self.used[e][slot] += 1;
        lane
    }
}

/// Parent pointers `(parent, edge)` of a tree spanning every terminal, or
/// `None` once some terminal is unreachable.
fn grow(res: &Residual, terminals: &[usize], root: usize, heuristic: Heuristic) -> Option<Vec<Option<(usize, usize)>>> {
    let n = res.mg.n();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut inside = vec![false; n];
    let mut is_terminal = vec![false; n];
    for &t in terminals {
        is_terminal[t] = true;
    }
    let mut missing = terminals.iter().filter(|&&t| t != root).count();
    inside[root] = true;
    if missing == 0 {
        return Some(parent);
    }
    match heuristic {
        Heuristic::ShortestPath => {
            let mut queue = VecDeque::from([root]);
            'bfs: while let Some(u) = queue.pop_front() {
                for &(v, e) in res.mg.neighbors(u) {
                    if !inside[v] && res.available(e, v) > 0 {
                        inside[v] = true;
                        parent[v] = Some((u, e));
                        if is_terminal[v] {
                            missing -= 1;
                            if missing == 0 {
                                break 'bfs;
                            }
                        }
                        queue.push_back(v);
                    }
                }
            }
        }
        Heuristic::Balanced => {
            let mut children = vec![0usize; n];
            // (children of u, spare copies, u, v, e) with lazy key refresh
            let mut heap = BinaryHeap::new();
            let push = |heap: &mut BinaryHeap<_>, children: &[usize], u: usize, inside: &[bool]| {
                for &(v, e) in res.mg.neighbors(u) {
                    let spare = res.available(e, v);
                    if !inside[v] && spare > 0 {
                        heap.push(Reverse((children[u], Reverse(spare), u, v, e)));
                    }
                }
            };
            push(&mut heap, &children, root, &inside);
            while let Some(Reverse((c, spare, u, v, e))) = heap.pop() {
                if inside[v] {
                    continue;
                }
                if c != children[u] {
                    heap.push(Reverse((children[u], spare, u, v, e)));
                    continue;
                }
                inside[v] = true;
                parent[v] = Some((u, e));
                children[u] += 1;
                if is_terminal[v] {
                    missing -= 1;
                    if missing == 0 {
                        break;
                    }
                }
                push(&mut heap, &children, v, &inside);
            }
        }
        Heuristic::Spanning => unreachable!("handled by spanning_trees"),
    }
    if missing > 0 {
        return None;
    }
    // keep only nodes on root paths of terminals
    let mut keep = vec![false; n];
    keep[root] = true;
    for &t in terminals {
        let mut u = t;
        while !keep[u] {
            keep[u] = true;
            u = parent[u].expect("reached node has a parent").0;
        }
    }
    for v in 0..n {
        if !keep[v] {
            parent[v] = None;
        }
    }
    Some(parent)
}

/// Greedy packing rooted at `root`, at most `max_trees` trees.
pub fn greedy_packing(
    mg: &UnitMultigraph,
    terminals: &[usize],
    root: usize,
    kind: PackingKind,
    heuristic: Heuristic,
    max_trees: usize,
) -> Vec<SteinerTree> {
    let mut res = Residual { mg, kind, used: vec![[0, 0]; mg.edges().len()] };
    let mut trees = Vec::new();
    if terminals.len() < 2 {
        return trees;
    }
    if heuristic == Heuristic::Spanning {
        if terminals.len() != mg.n() || mg.total_multiplicity() > SPANNING_LIMIT {
            return trees;
        }
        return spanning_trees(mg, root, max_trees);
    }
    while trees.len() < max_trees {
        let Some(parent) = grow(&res, terminals, root, heuristic) else { break };
        let mut arcs = Vec::new();
        for (v, p) in parent.iter().enumerate() {
            if let Some((u, e)) = *p {
                let lane = res.take(e, v);
                arcs.push(TreeArc { child: v, parent: u, edge: e, lane });
            }
        }
        trees.push(SteinerTree { root, arcs });
    }
    trees
}

/// Forest over expanded unit copies, adjacency labelled by copy id.
struct Forest {
    adj: Vec<Vec<(usize, usize)>>,
    size: usize,
}

impl Forest {
    fn new(n: usize) -> Self {
        Forest { adj: vec![Vec::new(); n], size: 0 }
    }

    /// Element ids on the forest path from `a` to `b`, or `None` if disconnected.
    fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let mut prev = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        seen[a] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(v, x) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, x));
                    queue.push_back(v);
                }
            }
        }
        if !seen[b] {
            return None;
        }
        let mut out = Vec::new();
        let mut u = b;
        while let Some((p, x)) = prev[u] {
            out.push(x);
            u = p;
        }
        Some(out)
    }

    fn insert(&mut self, x: usize, a: usize, b: usize) {
        self.adj[a].push((b, x));
        self.adj[b].push((a, x));
        self.size += 1;
    }

    fn remove(&mut self, x: usize, a: usize, b: usize) {
        self.adj[a].retain(|&(_, y)| y != x);
        self.adj[b].retain(|&(_, y)| y != x);
        self.size -= 1;
    }
}

/// Partitions unit copies into `k` forests with augmenting paths; returns
/// the forests when all of them span.
fn partition(n: usize, elements: &[(usize, usize)], k: usize) -> Option<Vec<Forest>> {
    let mut forests: Vec<Forest> = (0..k).map(|_| Forest::new(n)).collect();
    let mut owner: Vec<Option<usize>> = vec![None; elements.len()];
    for x in 0..elements.len() {
        // label[y] = (element that displaces y, forest it enters)
        let mut label: Vec<Option<(usize, usize)>> = vec![None; elements.len()];
        let mut visited = vec![false; elements.len()];
        visited[x] = true;
        let mut queue = VecDeque::from([x]);
        let mut found = None;
        'search: while let Some(y) = queue.pop_front() {
            let (a, b) = elements[y];
            for (i, forest) in forests.iter().enumerate() {
                if owner[y] == Some(i) {
                    continue;
                }
                match forest.path(a, b) {
                    None => {
                        found = Some((y, i));
                        break 'search;
                    }
                    Some(cycle) => {
                        for z in cycle {
                            if !visited[z] {
                                visited[z] = true;
                                label[z] = Some((y, i));
                                queue.push_back(z);
                            }
                        }
                    }
                }
            }
        }
        let Some((mut y, mut i)) = found else { continue };
        loop {
            if let Some(old) = owner[y] {
                let (a, b) = elements[y];
                forests[old].remove(y, a, b);
            }
            let (a, b) = elements[y];
            forests[i].insert(y, a, b);
            owner[y] = Some(i);
            match label[y] {
                Some((p, j)) => {
                    // y vacated forest j; its displacer p takes the spot
                    y = p;
                    i = j;
                }
                None => break,
            }
        }
        if forests.iter().all(|f| f.size == n - 1) {
            break;
        }
    }
    forests.iter().all(|f| f.size == n - 1).then_some(forests)
}

fn spanning_trees(mg: &UnitMultigraph, root: usize, max_trees: usize) -> Vec<SteinerTree> {
    let n = mg.n();
    let mut elements = Vec::new();
    let mut copy = Vec::new();
    for (e, me) in mg.edges().iter().enumerate() {
        for lane in 0..me.multiplicity {
            elements.push((me.u, me.v));
            copy.push((e, lane));
        }
    }
    let upper = (elements.len() / (n - 1)).min(max_trees);
    for k in (1..=upper).rev() {
        if let Some(forests) = partition(n, &elements, k) {
            return forests
                .iter()
                .map(|f| {
                    let edges: Vec<_> = (0..n)
                        .flat_map(|u| f.adj[u].iter().filter(move |&&(v, _)| u < v).map(move |&(v, x)| (u, v, x)))
                        .map(|(u, v, x)| (u, v, copy[x].0, copy[x].1))
                        .collect();
                    SteinerTree::from_edges(root, &edges)
                })
                .collect();
        }
    }
    Vec::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{verify_packing, PackingKind, TreePacking};

    fn complete(n: usize) -> UnitMultigraph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j, 1));
            }
        }
        UnitMultigraph::from_multiplicities(n, &e).unwrap()
    }

    #[test]
    fn spanning_partition_is_optimal_on_complete_graphs() {
        for n in 3..=12 {
            let mg = complete(n);
            let s: Vec<usize> = (0..n).collect();
            let trees = greedy_packing(&mg, &s, 0, PackingKind::Undirected, Heuristic::Spanning, 100);
            assert_eq!(trees.len(), n / 2, "K_{n}");
            let packing = TreePacking {
                kind: PackingKind::Undirected,
                terminals: s.clone(),
                pivot: 0,
                trees,
                alpha: None,
                construction: "greedy".into(),
            };
            assert!(verify_packing(&packing, &mg, &s).valid);
        }
    }

    #[test]
    fn shortest_path_prunes_non_terminals() {
        // path 0 - 1 - 2 with a pendant 3 on node 1
        let mg = UnitMultigraph::from_multiplicities(4, &[(0, 1, 1), (1, 2, 1), (1, 3, 1)]).unwrap();
        let trees = greedy_packing(&mg, &[0, 2], 0, PackingKind::Undirected, Heuristic::ShortestPath, 10);
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].nodes(), vec![0, 1, 2]);
    }
}
