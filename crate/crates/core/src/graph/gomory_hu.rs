//! Gusfield cut trees without node contraction.

use serde::Serialize;

use super::flow::CutSolver;
use super::{GraphError, UndirectedView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Tree on the vertex set whose path minima are the pairwise min cuts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GomoryHuTree {
    pub n: usize,
    pub edges: Vec<GhEdge>,
}

/// Builds the tree with `n - 1` max-flow calls.
///
/// Sinks are chosen by the lowest-index rule of the classic construction and
/// each cut uses the maximal source side, so the output is deterministic.
pub fn gomory_hu_tree(g: &UndirectedView) -> GomoryHuTree {
    let n = g.n();
    let solver = CutSolver::new(g);
    let mut parent = vec![0usize; n];
    let mut weight = vec![0f64; n];
    for s in 1..n {
        let t = parent[s];
        let (value, side) = solver.min_cut(s, t);
        weight[s] = value;
        for i in 0..n {
            if i != s && side[i] && parent[i] == t {
                parent[i] = s;
            }
        }
        if side[parent[t]] {
            parent[s] = parent[t];
            parent[t] = s;
            weight[s] = weight[t];
            weight[t] = value;
        }
    }
    let edges = (1..n)
        .map(|s| GhEdge { u: s.min(parent[s]), v: s.max(parent[s]), weight: weight[s] })
        .collect();
    GomoryHuTree { n, edges }
}

/// Minimum S-cut via the cut tree; infinite when `|S| < 2`.
pub fn min_s_cut(g: &UndirectedView, terminals: &[usize]) -> Result<f64, GraphError> {
    if let Some(&bad) = terminals.iter().find(|&&t| t >= g.n()) {
        return Err(GraphError::IndexOutOfRange(bad));
    }
    Ok(gomory_hu_tree(g).min_s_cut(terminals))
}

impl GomoryHuTree {
    /// `w_1 <= ... <= w_{n-1}` followed by the infinite sentinel.
    pub fn sorted_weights(&self) -> Vec<f64> {
        let mut w: Vec<f64> = self.edges.iter().map(|e| e.weight).collect();
        w.sort_by(f64::total_cmp);
        w.push(f64::INFINITY);
        w
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        adj
    }

    /// Smallest weight on the tree path between `s` and `t`.
    pub fn path_min(&self, s: usize, t: usize) -> f64 {
        if s == t {
            return f64::INFINITY;
        }
        let adj = self.adjacency();
        let mut best = vec![f64::NAN; self.n];
        best[s] = f64::INFINITY;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(v, w) in &adj[u] {
                if best[v].is_nan() {
                    best[v] = best[u].min(w);
                    stack.push(v);
                }
            }
        }
        best[t]
    }

    /// Smallest tree edge whose removal separates two terminals.
    pub fn min_s_cut(&self, terminals: &[usize]) -> f64 {
        let mut is_terminal = vec![false; self.n];
        for &t in terminals {
            is_terminal[t] = true;
        }
        let total = is_terminal.iter().filter(|&&x| x).count();
        if total < 2 {
            return f64::INFINITY;
        }
        // count terminals below each edge after rooting at 0
        let adj = self.adjacency();
        let mut order = Vec::with_capacity(self.n);
        let mut up = vec![(usize::MAX, 0.0); self.n];
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            order.push(u);
            for &(v, w) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    up[v] = (u, w);
                    stack.push(v);
                }
            }
        }
        let mut below: Vec<usize> = is_terminal.iter().map(|&x| x as usize).collect();
        let mut best = f64::INFINITY;
        for &u in order.iter().rev() {
            let (p, w) = up[u];
            if p == usize::MAX {
                continue;
            }
            if below[u] > 0 && below[u] < total {
                best = best.min(w);
            }
            below[p] += below[u];
        }
        best
    }
}
