//! Fastest-subset search over the cut tree, the harmonic batch term and the
//! batch stopping rules.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{gomory_hu_tree, GhEdge, GomoryHuTree, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("subset has no worker with finite compute time")]
    NoWorkers,
    #[error("parameter {name} must be {rule}, got {value}")]
    BadParam { name: &'static str, rule: &'static str, value: f64 },
}

/// Problem constants of the smooth nonconvex setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ProblemParams {
    /// Dimension in coordinates.
    pub d: f64,
    pub sigma2: f64,
    pub eps: f64,
    /// Smoothness constant.
    pub l: f64,
    /// Initial gap `f(x0) - f*`.
    pub delta: f64,
}

impl ProblemParams {
    pub fn new(d: f64, sigma2: f64, eps: f64, l: f64, delta: f64) -> Result<Self, SelectionError> {
        let p = ProblemParams { d, sigma2, eps, l, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        let nonneg = [("d", self.d), ("sigma2", self.sigma2)];
        for (name, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SelectionError::BadParam { name, rule: "finite and >= 0", value });
            }
        }
        for (name, value) in [("eps", self.eps), ("l", self.l), ("delta", self.delta)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SelectionError::BadParam { name, rule: "finite and > 0", value });
            }
        }
        Ok(())
    }

    /// `sigma^2 / eps`.
    pub fn ratio(&self) -> f64 {
        self.sigma2 / self.eps
    }

    /// `L * Delta / eps`.
    pub fn rate(&self) -> f64 {
        self.l * self.delta / self.eps
    }
}

/// `ceil(x)` that snaps to an integer within relative `1e-9` first, so that a
/// ratio like `1.6 / 0.1` counts as 16.
pub fn snapped_ceil(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Value and minimizing `m` of the harmonic batch expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicTerm {
    pub value: f64,
    /// Number of fastest workers attaining the minimum.
    pub m: usize,
}

/// `min_m (m / sum_{i<=m} 1/h_(i)) * (1 + ratio/m)` over the finite compute
/// times sorted ascending. The smallest minimizing `m` is reported.
pub fn harmonic_term(ratio: f64, h: &[f64]) -> Result<HarmonicTerm, SelectionError> {
    let mut fin: Vec<f64> = h.iter().copied().filter(|x| x.is_finite()).collect();
    if fin.is_empty() {
        return Err(SelectionError::NoWorkers);
    }
    fin.sort_by(f64::total_cmp);
    let mut inv = 0.0;
    let mut best = HarmonicTerm { value: f64::INFINITY, m: 0 };
    for (i, hi) in fin.iter().enumerate() {
        let m = (i + 1) as f64;
        inv += 1.0 / hi;
        let value = (m / inv) * (1.0 + ratio / m);
        if value < best.value {
            best = HarmonicTerm { value, m: i + 1 };
        }
    }
    Ok(best)
}

pub fn harmonic_batch_term(ratio: f64, h: &[f64]) -> Result<f64, SelectionError> {
    harmonic_term(ratio, h).map(|t| t.value)
}

/// `d / w_k + harmonic term`, with `d / inf = 0`.
pub fn subset_score(d: f64, w_k: f64, ratio: f64, h: &[f64]) -> Result<f64, SelectionError> {
    Ok(comm_term(d, w_k) + harmonic_batch_term(ratio, h)?)
}

pub fn comm_term(d: f64, w: f64) -> f64 {
    if w.is_infinite() || d == 0.0 {
        0.0
    } else {
        d / w
    }
}

/// Upper bound on the time to collect `b` gradients with compute times `h`.
pub fn batch_collection_bound(b: f64, h: &[f64]) -> Result<f64, SelectionError> {
    harmonic_batch_term(b, h)
}

/// `max(ceil(sigma^2/eps), 1)`.
pub fn grace_target_batch(params: &ProblemParams) -> u64 {
    snapped_ceil(params.ratio()).max(1.0) as u64
}

/// True once the harmonic mean of the per-worker counts reaches
/// `max(ceil(sigma^2/eps), n) / n`. Any zero count keeps it false.
pub fn leon_stop_rule(counts: &[u64], params: &ProblemParams) -> bool {
    let n = counts.len() as u64;
    if n == 0 || counts.contains(&0) {
        return false;
    }
    let threshold = (snapped_ceil(params.ratio()) as u64).max(n);
    // n / sum(1/B_i) >= T / n  <=>  n^2 >= T * sum(1/B_i), in exact rationals
    let (mut num, mut den) = (0u128, 1u128);
    for &b in counts {
        let b = b as u128;
        let next = num.checked_mul(b).and_then(|a| a.checked_add(den)).zip(den.checked_mul(b));
        let Some((s, nd)) = next else { return leon_stop_rule_float(counts, threshold) };
        let g = gcd(s, nd);
        num = s / g;
        den = nd / g;
    }
    match ((n as u128 * n as u128).checked_mul(den), (threshold as u128).checked_mul(num)) {
        (Some(lhs), Some(rhs)) => lhs >= rhs,
        _ => leon_stop_rule_float(counts, threshold),
    }
}

fn leon_stop_rule_float(counts: &[u64], threshold: u64) -> bool {
    let n = counts.len() as f64;
    let s: f64 = counts.iter().map(|&b| 1.0 / b as f64).sum();
    n * n >= threshold as f64 * s
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One iteration of the subset search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStep {
    pub k: usize,
    /// `w_k`, infinite at the last step.
    pub weight: f64,
    /// Components of the cut tree after removing the first `k - 1` edges,
    /// each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub scores: Vec<f64>,
    /// Index into `components` of the best one.
    pub best: usize,
    pub best_score: f64,
    /// Smallest computation term over the components.
    pub best_compute: f64,
    /// Edge removed at the end of this step.
    pub removed: Option<GhEdge>,
    pub running_score: f64,
    pub running_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub tree: GomoryHuTree,
    /// Tree edges in removal order.
    pub order: Vec<GhEdge>,
    pub steps: Vec<SelectionStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetChoice {
    pub subset: Vec<usize>,
    pub k: usize,
    pub score: f64,
    pub weight: f64,
    /// Minimizing number of fastest workers in the harmonic term.
    pub m: usize,
}

/// Components of the forest spanned by `kept`, each sorted ascending.
fn components(n: usize, kept: &[GhEdge]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in kept {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut comp = vec![s];
        label[s] = out.len();
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = out.len();
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Searches subsets along the cut tree with the edges removed in ascending
/// weight order, ties by smallest endpoint pair.
pub fn find_fastest_subset(
    g: &WeightedGraph,
    params: &ProblemParams,
) -> Result<(SubsetChoice, SelectionTrace), SelectionError> {
    params.validate()?;
    if g.workers().is_empty() {
        return Err(SelectionError::NoWorkers);
    }
    let n = g.n();
    let tree = gomory_hu_tree(&g.undirected());
    let mut order = tree.edges.clone();
    order.sort_by(|a, b| a.weight.total_cmp(&b.weight).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
    let ratio = params.ratio();
    let h = g.compute_times();

    let mut steps: Vec<SelectionStep> = Vec::with_capacity(n);
    let mut choice: Option<SubsetChoice> = None;
    for k in 1..=n {
        let weight = order.get(k - 1).map_or(f64::INFINITY, |e| e.weight);
        let comps = components(n, &order[k - 1..]);
        let mut scores = Vec::with_capacity(comps.len());
        let mut terms = Vec::with_capacity(comps.len());
        for c in &comps {
            let hs: Vec<f64> = c.iter().map(|&i| h[i]).collect();
            let term = harmonic_term(ratio, &hs).ok();
            scores.push(term.map_or(f64::INFINITY, |t| comm_term(params.d, weight) + t.value));
            terms.push(term);
        }
        let mut best = 0;
        for j in 1..comps.len() {
            let better = scores[j] < scores[best]
                || (scores[j] == scores[best] && comps[j].len() > comps[best].len());
            if better {
                best = j;
            }
        }
        if choice.as_ref().is_none_or(|c| scores[best] < c.score) {
            choice = Some(SubsetChoice {
                subset: comps[best].clone(),
                k,
                score: scores[best],
                weight,
                m: terms[best].map_or(0, |t| t.m),
            });
        }
        let current = choice.as_ref().expect("set at k = 1");
        let best_compute = terms.iter().flatten().map(|t| t.value).fold(f64::INFINITY, f64::min);
        steps.push(SelectionStep {
            k,
            weight,
            best_score: scores[best],
            best,
            best_compute,
            scores,
            components: comps,
            removed: order.get(k - 1).copied(),
            running_score: current.score,
            running_k: current.k,
        });
    }
    let choice = choice.expect("n >= 1");
    Ok((choice, SelectionTrace { tree, order, steps }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: f64, ratio: f64) -> ProblemParams {
        ProblemParams::new(d, ratio, 1.0, 1.0, 1.0).unwrap()
    }

    fn five_node(h: f64) -> WeightedGraph {
        let nodes: Vec<_> = (1..=5).map(|i| (i, h)).collect();
        let links = [(1, 2, 2.0, 0.0), (2, 3, 2.0, 0.0), (4, 5, 1.0, 0.0), (1, 5, 1.0, 0.0), (2, 5, 1.0, 0.0)];
        WeightedGraph::new(&nodes, &links).unwrap()
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_batch_term(0.0, &[3.0]).unwrap(), 3.0);
        assert_eq!(harmonic_batch_term(2.0, &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(harmonic_batch_term(0.0, &[1.0, 100.0]).unwrap(), 1.0);
        assert_eq!(harmonic_batch_term(1.0, &[f64::INFINITY]), Err(SelectionError::NoWorkers));
        assert_eq!(harmonic_batch_term(0.0, &[f64::INFINITY, 4.0]).unwrap(), 4.0);
    }

    #[test]
    fn collection_bound_examples() {
        assert_eq!(batch_collection_bound(0.0, &[2.0, 5.0]).unwrap(), 2.0);
        assert_eq!(batch_collection_bound(5.0, &[1.0]).unwrap(), 6.0);
        assert_eq!(batch_collection_bound(2.0, &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn score_examples() {
        assert_eq!(subset_score(7.0, f64::INFINITY, 3.0, &[2.0]).unwrap(), 8.0);
        assert_eq!(subset_score(0.0, 1.0, 0.0, &[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn target_batch() {
        let p = |s: f64, e: f64| ProblemParams::new(1.0, s, e, 1.0, 1.0).unwrap();
        assert_eq!(grace_target_batch(&p(3.2, 1.0)), 4);
        assert_eq!(grace_target_batch(&p(0.0, 1.0)), 1);
        assert_eq!(grace_target_batch(&p(100.0, 1.0)), 100);
        assert_eq!(grace_target_batch(&p(1.6, 0.1)), 16);
    }

    #[test]
    fn leon_rule_examples() {
        let p4 = params(1.0, 4.0);
        assert!(leon_stop_rule(&[2, 2], &p4));
        assert!(!leon_stop_rule(&[1, 4], &p4));
        assert!(!leon_stop_rule(&[0, 9], &p4));
        assert!(leon_stop_rule(&[1, 1, 1], &params(1.0, 0.0)));
        assert!(leon_stop_rule(&[3, 3, 3], &params(1.0, 9.0)));
    }

    #[test]
    fn five_node_trace_splits() {
        let (_, trace) = find_fastest_subset(&five_node(1.0), &params(1.0, 1.0)).unwrap();
        let comps: Vec<_> = trace.steps.iter().map(|s| s.components.clone()).collect();
        assert_eq!(comps[0], vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(comps[1], vec![vec![0, 1, 2, 4], vec![3]]);
        assert_eq!(comps[2], vec![vec![0, 1, 4], vec![2], vec![3]]);
        assert_eq!(comps[3], vec![vec![0, 1], vec![2], vec![3], vec![4]]);
        assert_eq!(comps[4].len(), 5);
        for (k, s) in trace.steps.iter().enumerate() {
            assert_eq!(s.components.len(), k + 1);
        }
    }

    #[test]
    fn noiseless_picks_fastest_worker() {
        let nodes = [(1, 3.0), (2, 1.5), (3, 2.0)];
        let g = WeightedGraph::new(&nodes, &[(1, 2, 1.0, 0.0), (2, 3, 1.0, 0.0)]).unwrap();
        let (choice, _) = find_fastest_subset(&g, &params(5.0, 0.0)).unwrap();
        assert_eq!(choice.subset, vec![1]);
        assert_eq!(choice.score, 1.5);
    }

    #[test]
    fn star_with_huge_dimension_is_single_worker() {
        let g = crate::graph::build_graph(&crate::graph::topology::generate("star:6:b=1").unwrap()).unwrap();
        let (choice, _) = find_fastest_subset(&g, &params(1e9, 10.0)).unwrap();
        assert_eq!(choice.subset.len(), 1);
    }

    #[test]
    fn switch_only_components_score_infinite() {
        let nodes = [(1, 1.0), (2, f64::INFINITY)];
        let g = WeightedGraph::new(&nodes, &[(1, 2, 1.0, 0.0)]).unwrap();
        let (choice, trace) = find_fastest_subset(&g, &params(1.0, 0.0)).unwrap();
        assert_eq!(choice.subset, vec![0]);
        assert!(trace.steps[1].scores.contains(&f64::INFINITY));
    }
}
