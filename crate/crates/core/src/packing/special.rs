//! Exact packings for stars, rings, 2-tori and complete graphs.

use std::collections::HashMap;

use serde::Serialize;

use super::{PackingKind, SteinerTree, TreeArc};
use crate::graph::UnitMultigraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "topology", rename_all = "snake_case")]
pub enum Topology {
    Star { hub: usize },
    Ring,
    /// Row-major `rows x cols` wrap-around grid.
    Torus2 { rows: usize, cols: usize },
    Complete,
}

fn edge_index(mg: &UnitMultigraph) -> HashMap<(usize, usize), usize> {
    mg.edges().iter().enumerate().map(|(k, e)| ((e.u.min(e.v), e.u.max(e.v)), k)).collect()
}

fn simple(mg: &UnitMultigraph) -> bool {
    edge_index(mg).len() == mg.edges().len()
}

/// Structural match against the supported families.
pub fn recognize(mg: &UnitMultigraph) -> Option<Topology> {
    let n = mg.n();
    if n < 2 || !simple(mg) {
        return None;
    }
    let m = mg.edges().len();
    let degree: Vec<usize> = (0..n).map(|v| mg.neighbors(v).len()).collect();
    if m == n - 1 {
        if let Some(hub) = (0..n).find(|&v| degree[v] == n - 1) {
            return Some(Topology::Star { hub });
        }
    }
    if n >= 3 && m == n * (n - 1) / 2 {
        return Some(Topology::Complete);
    }
    if n >= 9 && m == 2 * n && degree.iter().all(|&d| d == 4) {
        let index = edge_index(mg);
        for rows in 3..=n / 3 {
            if !n.is_multiple_of(rows) || n / rows < 3 {
                continue;
            }
            let cols = n / rows;
            let fits = (0..n).all(|v| {
                let (i, j) = (v / cols, v % cols);
                let right = i * cols + (j + 1) % cols;
                let down = ((i + 1) % rows) * cols + j;
                index.contains_key(&(v.min(right), v.max(right))) && index.contains_key(&(v.min(down), v.max(down)))
            });
            if fits {
                return Some(Topology::Torus2 { rows, cols });
            }
        }
    }
    if n >= 3 && m == n && degree.iter().all(|&d| d == 2) && mg.as_view().is_connected() {
        return Some(Topology::Ring);
    }
    None
}

fn uniform(mg: &UnitMultigraph) -> Option<u64> {
    let m = mg.edges().first()?.multiplicity;
    mg.edges().iter().all(|e| e.multiplicity == m).then_some(m)
}

type Built = (PackingKind, usize, Vec<SteinerTree>, String);

/// Specialized packing when the topology and terminal set allow one.
pub(super) fn construct(mg: &UnitMultigraph, s: &[usize], max_trees: usize) -> Option<Built> {
    let topo = recognize(mg)?;
    let index = edge_index(mg);
    let edge = |a: usize, b: usize| index[&(a.min(b), a.max(b))];
    let everyone = s.len() == mg.n();
    let mut trees = Vec::new();
    match topo {
        Topology::Star { hub } => {
            let pivot = if s.contains(&hub) { hub } else { s[0] };
            let lanes = s.iter().filter(|&&v| v != hub).map(|&v| mg.edges()[edge(hub, v)].multiplicity).min()?;
            for lane in 0..lanes.min(max_trees as u64) {
                let edges: Vec<_> =
                    s.iter().filter(|&&v| v != hub).map(|&v| (hub, v, edge(hub, v), lane)).collect();
                trees.push(SteinerTree::from_edges(pivot, &edges));
            }
            Some((PackingKind::Undirected, pivot, trees, "star".into()))
        }
        Topology::Ring if everyone => {
            let lanes = uniform(mg)?;
            let n = mg.n();
            let pivot = 0;
            let order = ring_order(mg);
            let pos: Vec<usize> = {
                let mut p = vec![0; n];
                for (i, &v) in order.iter().enumerate() {
                    p[v] = i;
                }
                p
            };
            for lane in 0..lanes {
                for step in [1, n - 1] {
                    if trees.len() >= max_trees {
                        break;
                    }
                    // every node forwards to its successor in one rotation
                    let arcs = (0..n)
                        .filter(|&v| v != pivot)
                        .map(|v| {
                            let next = order[(pos[v] + step) % n];
                            TreeArc { child: v, parent: next, edge: edge(v, next), lane }
                        })
                        .collect();
                    trees.push(SteinerTree { root: pivot, arcs });
                }
            }
            Some((PackingKind::Bidirected, pivot, trees, "ring".into()))
        }
        Topology::Torus2 { rows, cols } if everyone => {
            let lanes = uniform(mg)?;
            let (ci, cj) = (rows / 2, cols / 2);
            let pivot = ci * cols + cj;
            let at = |i: usize, j: usize| i * cols + j;
            // (di, dj) per tree for off-axis nodes; on-axis nodes swap the axes
            let off: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
            let on: [(isize, isize); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
            for lane in 0..lanes {
                for t in 0..4 {
                    if trees.len() >= max_trees {
                        break;
                    }
                    let mut arcs = Vec::new();
                    for i in 0..rows {
                        for j in 0..cols {
                            let v = at(i, j);
                            if v == pivot {
                                continue;
                            }
                            let (di, dj) = if i == ci || j == cj { on[t] } else { off[t] };
                            let ni = (i as isize + di).rem_euclid(rows as isize) as usize;
                            let nj = (j as isize + dj).rem_euclid(cols as isize) as usize;
                            let next = at(ni, nj);
                            arcs.push(TreeArc { child: v, parent: next, edge: edge(v, next), lane });
                        }
                    }
                    trees.push(SteinerTree { root: pivot, arcs });
                }
            }
            Some((PackingKind::Bidirected, pivot, trees, "torus".into()))
        }
        Topology::Complete if everyone => {
            let lanes = uniform(mg)?;
            let n = mg.n();
            let pivot = 0;
            for lane in 0..lanes {
                for j in 1..n {
                    if trees.len() >= max_trees {
                        break;
                    }
                    let mut arcs = vec![TreeArc { child: j, parent: pivot, edge: edge(j, pivot), lane }];
                    for i in 1..n {
                        if i != j {
                            arcs.push(TreeArc { child: i, parent: j, edge: edge(i, j), lane });
                        }
                    }
                    trees.push(SteinerTree { root: pivot, arcs });
                }
            }
            Some((PackingKind::Bidirected, pivot, trees, "complete".into()))
        }
        _ => None,
    }
}

/// Cyclic node order of a ring starting at node 0 toward its lower neighbor.
fn ring_order(mg: &UnitMultigraph) -> Vec<usize> {
    let n = mg.n();
    let mut order = vec![0];
    let mut prev = usize::MAX;
    let mut cur = 0;
    while order.len() < n {
        let next = mg.neighbors(cur).iter().map(|&(v, _)| v).find(|&v| v != prev).expect("ring neighbor");
        prev = cur;
        cur = next;
        order.push(cur);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, topology::generate, unit_multigraph};
    use crate::packing::{pack_steiner_trees, verify_packing, Strategy};

    fn mg(spec: &str) -> UnitMultigraph {
        let g = build_graph(&generate(spec).unwrap()).unwrap();
        unit_multigraph(&g.undirected(), 64).unwrap()
    }

    fn check(spec: &str, expect: Topology, p: usize) {
        let mg = mg(spec);
        assert_eq!(recognize(&mg), Some(expect), "{spec}");
        let s: Vec<usize> = (0..mg.n()).collect();
        let packing = pack_steiner_trees(&mg, &s, Strategy::Specialized).unwrap();
        assert_eq!(packing.p(), p, "{spec}");
        let report = verify_packing(&packing, &mg, &s);
        assert!(report.valid, "{spec}: {:?}", report.failures);
        assert_eq!(report.alpha, Some(p as u64), "{spec}");
    }

    #[test]
    fn specialized_families_are_exact() {
        check("star:6:b=3", Topology::Star { hub: 0 }, 3);
        check("ring:7:b=2", Topology::Ring, 4);
        check("torus:5x5", Topology::Torus2 { rows: 5, cols: 5 }, 4);
        check("torus:3x4:b=2", Topology::Torus2 { rows: 3, cols: 4 }, 8);
        check("complete:6", Topology::Complete, 5);
    }

    #[test]
    fn torus_trees_are_shallow() {
        let mg = mg("torus:5x5");
        let s: Vec<usize> = (0..25).collect();
        let packing = pack_steiner_trees(&mg, &s, Strategy::Auto).unwrap();
        assert_eq!(packing.pivot, 12);
        assert!(packing.trees.iter().all(|t| t.depth() <= 9));
    }

    #[test]
    fn partial_terminals_fall_back() {
        let mg = mg("ring:6");
        assert!(pack_steiner_trees(&mg, &[0, 3], Strategy::Specialized).is_err());
        let packing = pack_steiner_trees(&mg, &[0, 3], Strategy::Auto).unwrap();
        assert_eq!(packing.p(), 2);
    }
}
