//! Dinic blocking-flow max-flow on undirected capacities.
//!
//! Capacities that become integral under a common scale are solved in exact
//! integer arithmetic; anything else falls back to `f64` with a relative
//! residual tolerance.

use std::collections::VecDeque;

use super::multigraph::integral_scale;
use super::UndirectedView;

trait Capacity: Copy + PartialOrd + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {
    const ZERO: Self;
    fn is_positive(self, eps: Self) -> bool;
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Capacity for i64 {
    const ZERO: Self = 0;
    fn is_positive(self, _eps: Self) -> bool {
        self > 0
    }
}

impl Capacity for f64 {
    const ZERO: Self = 0.0;
    fn is_positive(self, eps: Self) -> bool {
        self > eps
    }
}

struct Network<C> {
    n: usize,
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<C>,
    eps: C,
}

impl<C: Capacity> Network<C> {
    fn new(n: usize, edges: impl Iterator<Item = (usize, usize, C)>, eps: C) -> Self {
        let mut net = Network { n, head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new(), eps };
        for (u, v, c) in edges {
            // an undirected edge is a pair of arcs that are each other's residual
            net.head[u].push(net.to.len());
            net.to.push(v);
            net.cap.push(c);
            net.head[v].push(net.to.len());
            net.to.push(u);
            net.cap.push(c);
        }
        net
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.n];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if level[v] == usize::MAX && self.cap[e].is_positive(self.eps) {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, t: usize, pushed: C, level: &[usize], next: &mut [usize]) -> C {
        if u == t {
            return pushed;
        }
        while next[u] < self.head[u].len() {
            let e = self.head[u][next[u]];
            let v = self.to[e];
            if level[v] == level[u] + 1 && self.cap[e].is_positive(self.eps) {
                let got = self.augment(v, t, pushed.min(self.cap[e]), level, next);
                if got.is_positive(C::ZERO) {
                    self.cap[e] = self.cap[e] - got;
                    self.cap[e ^ 1] = self.cap[e ^ 1] + got;
                    return got;
                }
            }
            next[u] += 1;
        }
        C::ZERO
    }

    fn max_flow(&mut self, s: usize, t: usize, infinity: C) -> C {
        let mut total = C::ZERO;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.n];
            loop {
                let got = self.augment(s, t, infinity, &level, &mut next);
                if !got.is_positive(self.eps) {
                    break;
                }
                total = total + got;
            }
        }
    }

    /// Complement of the nodes that can still reach `t` in the residual graph.
    fn maximal_source_side(&self, t: usize) -> Vec<bool> {
        let mut reaches = vec![false; self.n];
        reaches[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.head[v] {
                // arc e: v -> w, its partner e^1: w -> v
                let w = self.to[e];
                if !reaches[w] && self.cap[e ^ 1].is_positive(self.eps) {
                    reaches[w] = true;
                    queue.push_back(w);
                }
            }
        }
        reaches.into_iter().map(|r| !r).collect()
    }
}

/// Reusable min-cut oracle for one undirected graph.
pub(crate) struct CutSolver<'a> {
    g: &'a UndirectedView,
    scaled: Option<(u64, Vec<i64>)>,
}

impl<'a> CutSolver<'a> {
    pub(crate) fn new(g: &'a UndirectedView) -> Self {
        let weights: Vec<f64> = g.edges().iter().map(|e| e.2).collect();
        let scaled = integral_scale(&weights, super::DEFAULT_MAX_SCALE).and_then(|scale| {
            let caps: Vec<i64> = weights.iter().map(|w| (w * scale as f64).round() as i64).collect();
            let total: i128 = caps.iter().map(|&c| c as i128).sum();
            (total < (i64::MAX / 4) as i128).then_some((scale, caps))
        });
        CutSolver { g, scaled }
    }

    /// Minimum s-t cut value and the maximal minimum source side as a mask.
    pub(crate) fn min_cut(&self, s: usize, t: usize) -> (f64, Vec<bool>) {
        let n = self.g.n();
        let ends = self.g.edges().iter().map(|&(u, v, _)| (u, v));
        match &self.scaled {
            Some((scale, caps)) => {
                let total: i64 = caps.iter().sum();
                let mut net = Network::new(n, ends.zip(caps.iter().copied()).map(|((u, v), c)| (u, v, c)), 0);
                let value = net.max_flow(s, t, total + 1);
                (value as f64 / *scale as f64, net.maximal_source_side(t))
            }
            None => {
                let total: f64 = self.g.edges().iter().map(|e| e.2).sum();
                let eps = total * 1e-12;
                let caps = self.g.edges().iter().map(|e| e.2);
                let mut net = Network::new(n, ends.zip(caps).map(|((u, v), c)| (u, v, c)), eps);
                let value = net.max_flow(s, t, total * 2.0 + 1.0);
                (value, net.maximal_source_side(t))
            }
        }
    }
}
