//! Closed-form time complexities of the SGD variants on a given topology,
//! topology-specific formulas and the sparse-graph trade-off bounds.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{min_s_cut, WeightedGraph};
use crate::selection::{comm_term, find_fastest_subset, harmonic_term, snapped_ceil, ProblemParams, SelectionError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyzerError {
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("{0}")]
    Precondition(String),
    #[error("unknown topology kind {0:?}")]
    UnknownKind(String),
}

/// `Constants` keeps the explicit iteration count `ceil(4 L Delta / eps)`,
/// `Asymptotic` drops constants and uses `L Delta / eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Constants,
    Asymptotic,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constants" => Ok(Mode::Constants),
            "asymptotic" => Ok(Mode::Asymptotic),
            _ => Err(format!("unknown mode {s:?} (constants, asymptotic)")),
        }
    }
}

/// Iteration factor shared by every method.
pub fn iterations(params: &ProblemParams, mode: Mode) -> f64 {
    match mode {
        Mode::Constants => snapped_ceil(4.0 * params.rate()),
        Mode::Asymptotic => params.rate(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    Sum,
    Max,
}

/// Seconds over the whole run, already multiplied by the iteration factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Terms {
    pub communication: f64,
    pub statistical: f64,
    pub deterministic: f64,
    pub latency: f64,
}

impl Terms {
    /// Term-by-term agreement within relative tolerance `rel`.
    pub fn close_to(&self, other: &Terms, rel: f64) -> bool {
        let pairs = [
            (self.communication, other.communication),
            (self.statistical, other.statistical),
            (self.deterministic, other.deterministic),
            (self.latency, other.latency),
        ];
        pairs.iter().all(|&(a, b)| a == b || (a - b).abs() <= rel * a.abs().max(b.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regime {
    pub label: String,
    pub terms: Terms,
    pub combine: Combine,
    /// Workers taking part; latency only applies when more than one does.
    pub workers: usize,
    pub total: f64,
}

impl Regime {
    fn new(label: impl Into<String>, per_iter: Terms, combine: Combine, workers: usize, k: f64) -> Regime {
        let terms = Terms {
            communication: per_iter.communication * k,
            statistical: per_iter.statistical * k,
            deterministic: per_iter.deterministic * k,
            latency: per_iter.latency * k,
        };
        let mut r = Regime { label: label.into(), terms, combine, workers, total: 0.0 };
        r.total = r.evaluate();
        r
    }

    fn evaluate(&self) -> f64 {
        let t = &self.terms;
        let body = match self.combine {
            Combine::Sum => t.communication + t.statistical + t.deterministic,
            Combine::Max => t.communication.max(t.statistical).max(t.deterministic),
        };
        body + t.latency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityReport {
    pub method: String,
    pub mode: Mode,
    pub iterations: f64,
    pub regimes: Vec<Regime>,
    /// Index of the regime attaining the minimum, first on ties.
    pub winner: usize,
    pub total: f64,
}

impl ComplexityReport {
    fn new(method: impl Into<String>, mode: Mode, iterations: f64, regimes: Vec<Regime>) -> ComplexityReport {
        let mut r = ComplexityReport { method: method.into(), mode, iterations, regimes, winner: 0, total: 0.0 };
        r.pick();
        r
    }

    fn pick(&mut self) {
        self.winner = 0;
        for (i, reg) in self.regimes.iter().enumerate() {
            if reg.total < self.regimes[self.winner].total {
                self.winner = i;
            }
        }
        self.total = self.regimes[self.winner].total;
    }

    pub fn best(&self) -> &Regime {
        &self.regimes[self.winner]
    }
}

/// Splits a harmonic value `hm * (1 + r/m)` into its deterministic and
/// statistical parts.
fn compute_terms(hm: f64, ratio: f64, m: usize) -> (f64, f64) {
    (hm, hm * ratio / m as f64)
}

fn worker_times(g: &WeightedGraph) -> Vec<f64> {
    g.workers().iter().map(|&i| g.compute_time(i)).collect()
}

/// Mean of the `m` fastest of `h` in harmonic form: `m / sum 1/h`.
fn harmonic_mean_fastest(h: &[f64], m: usize) -> f64 {
    let mut s: Vec<f64> = h.iter().copied().filter(|x| x.is_finite()).collect();
    s.sort_by(f64::total_cmp);
    m as f64 / s[..m].iter().map(|x| 1.0 / x).sum::<f64>()
}

/// One regime per search step: the best component at that step.
pub fn grace_complexity(g: &WeightedGraph, params: &ProblemParams, mode: Mode) -> Result<ComplexityReport, AnalyzerError> {
    let (_, trace) = find_fastest_subset(g, params)?;
    let k_iter = iterations(params, mode);
    let ratio = params.ratio();
    let h = g.compute_times();
    let mut regimes = Vec::new();
    for step in &trace.steps {
        let comp = &step.components[step.best];
        let hs: Vec<f64> = comp.iter().map(|&i| h[i]).collect();
        let Ok(ht) = harmonic_term(ratio, &hs) else { continue };
        let hm = harmonic_mean_fastest(&hs, ht.m);
        let (det, stat) = compute_terms(hm, ratio, ht.m);
        let per = Terms { communication: comm_term(params.d, step.weight), statistical: stat, deterministic: det, latency: 0.0 };
        let workers = hs.iter().filter(|x| x.is_finite()).count();
        regimes.push(Regime::new(format!("k={} |S|={}", step.k, comp.len()), per, Combine::Sum, workers, k_iter));
    }
    Ok(ComplexityReport::new("grace", mode, k_iter, regimes))
}

/// Leon over the workers `subset` (all workers when `None`); the bottleneck
/// is the minimum cut separating two of them.
pub fn leon_complexity_on(
    g: &WeightedGraph,
    params: &ProblemParams,
    mode: Mode,
    subset: Option<&[usize]>,
) -> Result<ComplexityReport, AnalyzerError> {
    params.validate()?;
    let workers: Vec<usize> = match subset {
        Some(s) => s.iter().copied().filter(|&i| !g.is_switch(i)).collect(),
        None => g.workers(),
    };
    if workers.is_empty() {
        return Err(SelectionError::NoWorkers.into());
    }
    let cut = min_s_cut(&g.undirected(), &workers).map_err(|e| AnalyzerError::Precondition(e.to_string()))?;
    let hs: Vec<f64> = workers.iter().map(|&i| g.compute_time(i)).collect();
    let n = hs.len() as f64;
    let per = Terms {
        communication: comm_term(params.d, cut),
        deterministic: hs.iter().copied().fold(0.0, f64::max),
        statistical: params.ratio() / n * (hs.iter().sum::<f64>() / n),
        latency: 0.0,
    };
    let k = iterations(params, mode);
    Ok(ComplexityReport::new("leon", mode, k, vec![Regime::new("all workers", per, Combine::Max, hs.len(), k)]))
}

pub fn leon_complexity(g: &WeightedGraph, params: &ProblemParams, mode: Mode) -> Result<ComplexityReport, AnalyzerError> {
    leon_complexity_on(g, params, mode, None)
}

/// `(d / b_min + h_max)(1 + sigma^2 / (n eps))` per unit of the iteration factor.
pub fn sync_sgd_complexity(g: &WeightedGraph, params: &ProblemParams, mode: Mode) -> Result<ComplexityReport, AnalyzerError> {
    params.validate()?;
    let hs = worker_times(g);
    if hs.is_empty() {
        return Err(SelectionError::NoWorkers.into());
    }
    let n = hs.len() as f64;
    let h_max = hs.iter().copied().fold(0.0, f64::max);
    let b_min = g.min_bandwidth();
    let factor = 1.0 + params.ratio() / n;
    let per = Terms {
        communication: comm_term(params.d, b_min) * factor,
        deterministic: h_max,
        statistical: h_max * params.ratio() / n,
        latency: 0.0,
    };
    let k = iterations(params, mode);
    Ok(ComplexityReport::new("sync", mode, k, vec![Regime::new("all workers", per, Combine::Sum, hs.len(), k)]))
}

/// `h_min (1 + sigma^2 / eps)` per unit of the iteration factor.
pub fn hero_sgd_complexity(params: &ProblemParams, h: &[f64], mode: Mode) -> Result<ComplexityReport, AnalyzerError> {
    params.validate()?;
    let h_min = h.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    if h_min.is_infinite() {
        return Err(SelectionError::NoWorkers.into());
    }
    let per = Terms { communication: 0.0, deterministic: h_min, statistical: h_min * params.ratio(), latency: 0.0 };
    let k = iterations(params, mode);
    Ok(ComplexityReport::new("hero", mode, k, vec![Regime::new("fastest worker", per, Combine::Sum, 1, k)]))
}

/// Adds `l_max` per iteration to every regime with more than one worker and
/// re-selects the winner.
pub fn latency_adjusted(report: &ComplexityReport, l_max: f64) -> ComplexityReport {
    let mut out = report.clone();
    for r in &mut out.regimes {
        if r.workers > 1 {
            r.terms.latency += l_max * report.iterations;
            r.total = r.evaluate();
        }
    }
    out.pick();
    out
}

/// Topology parameters for the closed forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyParams {
    /// `n` workers around a hub (the hub itself does not compute).
    Star { n: usize, b: f64, h: f64 },
    /// `p`-dimensional torus with the given sides.
    Torus { sides: Vec<usize>, b: f64, h: f64 },
    AllToAll { n: usize, b: f64, h: f64 },
    /// `k` clusters of `m` workers, intra bandwidth `fast` (may be infinite),
    /// gateway ring bandwidth `slow`, compute time `hs[c]` in cluster `c`.
    KClusters { k: usize, m: usize, fast: f64, slow: f64, hs: Vec<f64> },
}

impl TopologyParams {
    pub fn kind(&self) -> &'static str {
        match self {
            TopologyParams::Star { .. } => "star",
            TopologyParams::Torus { .. } => "p_torus",
            TopologyParams::AllToAll { .. } => "all_to_all",
            TopologyParams::KClusters { .. } => "k_clusters",
        }
    }
}

fn uniform_regimes(n: usize, w: f64, h: f64, params: &ProblemParams, k: f64) -> Vec<Regime> {
    let r = params.ratio();
    vec![
        Regime::new(
            "all workers",
            Terms { communication: comm_term(params.d, w), statistical: h * r / n as f64, deterministic: h, latency: 0.0 },
            Combine::Sum,
            n,
            k,
        ),
        Regime::new("single worker", Terms { statistical: h * r, deterministic: h, ..Terms::default() }, Combine::Sum, 1, k),
    ]
}

fn check(cond: bool, what: &str) -> Result<(), AnalyzerError> {
    if cond {
        Ok(())
    } else {
        Err(AnalyzerError::Precondition(what.to_string()))
    }
}

/// Bottleneck and per-cluster cut of the gateway-ring cluster layout.
fn cluster_cuts(k: usize, m: usize, fast: f64, slow: f64) -> (f64, f64) {
    let ring = if k == 2 { slow } else { 2.0 * slow };
    let intra = if fast.is_infinite() || m < 2 { f64::INFINITY } else { (m as f64 - 1.0) * fast };
    (ring, intra)
}

/// Grace complexity written out for a named topology.
pub fn topology_closed_form(
    topo: &TopologyParams,
    params: &ProblemParams,
    mode: Mode,
) -> Result<ComplexityReport, AnalyzerError> {
    params.validate()?;
    let k = iterations(params, mode);
    let r = params.ratio();
    let regimes = match topo {
        TopologyParams::Star { n, b, h } => {
            check(*n >= 1, "star needs at least one worker")?;
            uniform_regimes(*n, *b, *h, params, k)
        }
        TopologyParams::Torus { sides, b, h } => {
            check(!sides.is_empty() && sides.iter().all(|&s| s >= 3), "torus sides must be at least 3")?;
            let n = sides.iter().product();
            uniform_regimes(n, 2.0 * sides.len() as f64 * b, *h, params, k)
        }
        TopologyParams::AllToAll { n, b, h } => {
            check(*n >= 2, "all-to-all needs at least two workers")?;
            uniform_regimes(*n, (*n as f64 - 1.0) * b, *h, params, k)
        }
        TopologyParams::KClusters { k: kc, m, fast, slow, hs } => {
            check(*kc >= 2 && *m >= 1 && hs.len() == *kc, "need K >= 2 clusters, M >= 1, one h per cluster")?;
            let (ring, intra) = cluster_cuts(*kc, *m, *fast, *slow);
            check(*m == 1 || ring < intra, "closed form needs the ring cut below the intra-cluster cut")?;
            let all: Vec<f64> = hs.iter().flat_map(|&h| std::iter::repeat_n(h, *m)).collect();
            let ht = harmonic_term(r, &all)?;
            let hm = harmonic_mean_fastest(&all, ht.m);
            let (det, stat) = compute_terms(hm, r, ht.m);
            let mut regimes = vec![Regime::new(
                "all clusters",
                Terms { communication: comm_term(params.d, ring), statistical: stat, deterministic: det, latency: 0.0 },
                Combine::Sum,
                all.len(),
                k,
            )];
            if *m >= 2 {
                let h_best = hs.iter().copied().fold(f64::INFINITY, f64::min);
                regimes.push(Regime::new(
                    "one cluster",
                    Terms {
                        communication: comm_term(params.d, intra),
                        statistical: h_best * r / *m as f64,
                        deterministic: h_best,
                        latency: 0.0,
                    },
                    Combine::Sum,
                    *m,
                    k,
                ));
            }
            let h_min = hs.iter().copied().fold(f64::INFINITY, f64::min);
            regimes.push(Regime::new(
                "single worker",
                Terms { statistical: h_min * r, deterministic: h_min, ..Terms::default() },
                Combine::Sum,
                1,
                k,
            ));
            regimes
        }
    };
    Ok(ComplexityReport::new(format!("grace/{}", topo.kind()), mode, k, regimes))
}

/// Leon complexity written out for a named topology.
pub fn leon_closed_form(topo: &TopologyParams, params: &ProblemParams, mode: Mode) -> Result<ComplexityReport, AnalyzerError> {
    params.validate()?;
    let k = iterations(params, mode);
    let r = params.ratio();
    let (cut, hs): (f64, Vec<f64>) = match topo {
        TopologyParams::Star { n, b, h } => (if *n >= 2 { *b } else { f64::INFINITY }, vec![*h; *n]),
        TopologyParams::Torus { sides, b, h } => (2.0 * sides.len() as f64 * b, vec![*h; sides.iter().product()]),
        TopologyParams::AllToAll { n, b, h } => ((*n as f64 - 1.0) * b, vec![*h; *n]),
        TopologyParams::KClusters { k: kc, m, fast, slow, hs } => {
            check(hs.len() == *kc, "one h per cluster")?;
            let (ring, intra) = cluster_cuts(*kc, *m, *fast, *slow);
            (ring.min(intra), hs.iter().flat_map(|&h| std::iter::repeat_n(h, *m)).collect())
        }
    };
    let n = hs.len() as f64;
    let per = Terms {
        communication: comm_term(params.d, cut),
        deterministic: hs.iter().copied().fold(0.0, f64::max),
        statistical: r / n * (hs.iter().sum::<f64>() / n),
        latency: 0.0,
    };
    Ok(ComplexityReport::new(
        format!("leon/{}", topo.kind()),
        mode,
        k,
        vec![Regime::new("all workers", per, Combine::Max, hs.len(), k)],
    ))
}

/// Degree statistics and the sparse-graph trade-off bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffReport {
    /// Degrees sorted in descending order; `k(m)` is entry `m - 1`.
    pub degrees: Vec<usize>,
    /// `n(m)` for `m = 1..n-1`: nodes with degree at least `m`.
    pub nodes_with_degree: Vec<usize>,
    /// Bounded-degree form `d/b + h sigma^2/(n eps) + h`.
    pub bounded_degree: f64,
    /// Minimum over `m in 2..=n` with the `m`-th largest degree.
    pub by_degree_rank: f64,
    pub by_degree_rank_m: usize,
    /// Minimum over `m in 1..n` with `n(m)` nodes.
    pub by_degree_count: f64,
    pub by_degree_count_m: usize,
    /// Single fastest worker `h (1 + sigma^2/eps)`.
    pub hero: f64,
    pub iterations: f64,
}

pub fn tradeoff_bounds(g: &WeightedGraph, params: &ProblemParams, mode: Mode) -> Result<TradeoffReport, AnalyzerError> {
    params.validate()?;
    let n = g.n();
    check(n >= 2, "trade-off bounds need at least two nodes")?;
    let h = g.compute_time(0);
    check(
        (0..n).all(|i| g.compute_time(i) == h) && h.is_finite(),
        "trade-off bounds need equal finite compute times",
    )?;
    let b = g.links()[0].bandwidth;
    check(g.links().iter().all(|l| l.bandwidth == b), "trade-off bounds need equal bandwidths")?;
    let k = iterations(params, mode);
    let r = params.ratio();
    let mut degrees: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let nodes_with_degree: Vec<usize> = (1..n).map(|m| degrees.iter().filter(|&&x| x >= m).count()).collect();
    let hero = h * (1.0 + r) * k;

    let mut by_rank = (f64::INFINITY, 0);
    for m in 2..=n {
        let v = params.d / (degrees[m - 1] as f64 * b) + h * r / m as f64;
        if v < by_rank.0 {
            by_rank = (v, m);
        }
    }
    let mut by_count = (f64::INFINITY, 0);
    for m in 1..n {
        let c = nodes_with_degree[m - 1];
        if c == 0 {
            continue;
        }
        let v = params.d / (m as f64 * b) + h * r / c as f64;
        if v < by_count.0 {
            by_count = (v, m);
        }
    }
    Ok(TradeoffReport {
        bounded_degree: (params.d / b + h * r / n as f64 + h) * k,
        by_degree_rank: ((by_rank.0 + h) * k).min(hero),
        by_degree_rank_m: by_rank.1,
        by_degree_count: ((by_count.0 + h) * k).min(hero),
        by_degree_count_m: by_count.1,
        hero,
        degrees,
        nodes_with_degree,
        iterations: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, topology::generate};

    fn gen(spec: &str) -> WeightedGraph {
        build_graph(&generate(spec).unwrap()).unwrap()
    }

    #[test]
    fn hero_example() {
        // L Delta / eps = 1 in asymptotic mode
        let p = ProblemParams::new(1.0, 10.0, 1.0, 1.0, 1.0).unwrap();
        let r = hero_sgd_complexity(&p, &[2.0, 5.0], Mode::Asymptotic).unwrap();
        assert_eq!(r.total, 22.0);
    }

    #[test]
    fn constants_mode_uses_four() {
        let p = ProblemParams::new(1.0, 0.0, 0.3, 1.0, 1.0).unwrap();
        assert_eq!(iterations(&p, Mode::Constants), 14.0);
        assert!((iterations(&p, Mode::Asymptotic) - 1.0 / 0.3).abs() < 1e-15);
    }

    #[test]
    fn one_worker_has_no_communication() {
        let g = WeightedGraph::new(&[(1, 2.0)], &[]).unwrap();
        let p = ProblemParams::new(100.0, 3.0, 1.0, 1.0, 1.0).unwrap();
        let r = grace_complexity(&g, &p, Mode::Asymptotic).unwrap();
        assert_eq!(r.total, 2.0 * (1.0 + 3.0));
        assert_eq!(r.best().terms.communication, 0.0);
    }

    #[test]
    fn sync_uses_min_bandwidth_and_slowest_worker() {
        let nodes: Vec<_> = (1..=5).map(|i| (i, i as f64)).collect();
        let links = [(1, 2, 2.0, 0.0), (2, 3, 2.0, 0.0), (4, 5, 1.0, 0.0), (1, 5, 1.0, 0.0), (2, 5, 1.0, 0.0)];
        let g = WeightedGraph::new(&nodes, &links).unwrap();
        let p = ProblemParams::new(10.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let r = sync_sgd_complexity(&g, &p, Mode::Asymptotic).unwrap();
        assert_eq!(r.total, 10.0 + 5.0);
    }

    #[test]
    fn star_closed_form_matches_grace() {
        let g = gen("star:8:b=2:h=1.5");
        let p = ProblemParams::new(30.0, 40.0, 0.5, 1.0, 1.0).unwrap();
        let topo = TopologyParams::Star { n: 8, b: 2.0, h: 1.5 };
        let closed = topology_closed_form(&topo, &p, Mode::Constants).unwrap();
        let general = grace_complexity(&g, &p, Mode::Constants).unwrap();
        assert!(closed.best().terms.close_to(&general.best().terms, 1e-12));
        assert!((closed.total - general.total).abs() <= 1e-12 * general.total);
        let leon = leon_complexity(&g, &p, Mode::Constants).unwrap();
        assert!(leon_closed_form(&topo, &p, Mode::Constants).unwrap().best().terms.close_to(&leon.best().terms, 1e-12));
    }

    #[test]
    fn latency_only_hits_communicating_regimes() {
        let g = gen("ring:6");
        let p = ProblemParams::new(1.0, 100.0, 1.0, 1.0, 1.0).unwrap();
        let r = grace_complexity(&g, &p, Mode::Asymptotic).unwrap();
        assert_eq!(latency_adjusted(&r, 0.0), r);
        let big = latency_adjusted(&r, 1e6);
        assert_eq!(big.best().workers, 1);
    }

    #[test]
    fn degree_statistics() {
        let p = ProblemParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let ring = tradeoff_bounds(&gen("ring:6"), &p, Mode::Asymptotic).unwrap();
        assert!(ring.degrees.iter().all(|&d| d == 2));
        let k6 = tradeoff_bounds(&gen("complete:6"), &p, Mode::Asymptotic).unwrap();
        assert!(k6.degrees.iter().all(|&d| d == 5));
        let star = tradeoff_bounds(&gen("star:5:hub=worker"), &p, Mode::Asymptotic).unwrap();
        assert_eq!(star.degrees[1], 1);
        assert_eq!(star.nodes_with_degree, vec![6, 1, 1, 1, 1]);
    }
}
