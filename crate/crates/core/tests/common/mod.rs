#![allow(dead_code)]

use bwopt::graph::{build_graph, topology::generate, UndirectedView, WeightedGraph};
use proptest::prelude::*;

/// Connected edge list on `n` nodes: a random spanning tree plus extras.
pub fn connected_edges(max_n: usize, max_w: u32) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2..=max_n).prop_flat_map(move |n| {
        let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
        let tree_w = prop::collection::vec(1..=max_w, n - 1);
        let extra = prop::collection::vec((0..n, 0..n, 1..=max_w), 0..=n * 2);
        (Just(n), parents, tree_w, extra).prop_map(|(n, parents, tw, extra)| {
            let mut edges: Vec<(usize, usize, f64)> =
                parents.iter().zip(&tw).enumerate().map(|(i, (&p, &w))| (p, i + 1, w as f64)).collect();
            for (a, b, w) in extra {
                let (u, v) = (a.min(b), a.max(b));
                if u != v && !edges.iter().any(|e| (e.0.min(e.1), e.0.max(e.1)) == (u, v)) {
                    edges.push((u, v, w as f64));
                }
            }
            (n, edges)
        })
    })
}

pub fn view((n, edges): &(usize, Vec<(usize, usize, f64)>)) -> UndirectedView {
    UndirectedView::new(*n, edges.clone()).unwrap()
}

pub fn weighted(n: usize, edges: &[(usize, usize, f64)], h: &[f64]) -> WeightedGraph {
    let nodes: Vec<(u32, f64)> = (0..n).map(|i| (i as u32, h[i])).collect();
    let links: Vec<(u32, u32, f64, f64)> = edges.iter().map(|&(u, v, w)| (u as u32, v as u32, w, 0.0)).collect();
    WeightedGraph::new(&nodes, &links).unwrap()
}

pub fn gen(spec: &str) -> WeightedGraph {
    build_graph(&generate(spec).unwrap()).unwrap()
}

/// Minimum weight of an edge set separating `s` from `t`, by enumeration.
pub fn brute_cut(g: &UndirectedView, separates: impl Fn(&[bool]) -> bool) -> f64 {
    let n = g.n();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let side: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        if separates(&side) {
            best = best.min(g.cut_value(&side));
        }
    }
    best
}
