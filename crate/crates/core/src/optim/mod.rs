//! Simulated Grace, Leon, synchronous and single-worker SGD.
//!
//! Wall-clock time comes from the simulator: gradient collection is replayed
//! every iteration, and the AllReduce of a fixed subset is simulated once
//! since its duration does not depend on the iterate.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{unit_multigraph, GraphError, UnitMultigraph, WeightedGraph, DEFAULT_MAX_SCALE};
use crate::packing::{pack_with_limit, PackingError, Strategy};
use crate::selection::{find_fastest_subset, grace_target_batch, leon_stop_rule, ProblemParams, SelectionError};
use crate::sim::{collect_batch, run_allreduce, run_gradient_computation, run_naive_sync_round, AllReduceOptions, SimError};

pub mod objective;
pub mod oracle;

pub use objective::{make_logreg, make_objective, make_quadratic, Objective, ObjectiveKind, Problem, Shape};
pub use oracle::{OracleMode, StochasticOracle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown objective kind {0:?} (quadratic, logreg)")]
    UnknownKind(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub max_iters: usize,
    /// Defaults to `1 / (2L)`.
    pub gamma: Option<f64>,
    /// Stop once the simulated clock passes this.
    pub max_time: f64,
    /// Stop once `f(x) - f*` is at most this.
    pub target_gap: Option<f64>,
    pub allreduce: AllReduceOptions,
    /// Gradients per worker per synchronous round.
    pub sync_batch: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_iters: 1000,
            gamma: None,
            max_time: f64::INFINITY,
            target_gap: None,
            allreduce: AllReduceOptions::default(),
            sync_batch: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    MaxIters,
    TargetReached,
    TimeLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub sim_time_s: f64,
    pub grad_norm_sq: f64,
    pub f_value: f64,
    pub total_batch: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingTrace {
    pub method: String,
    /// Worker nodes that computed gradients.
    pub subset: Vec<usize>,
    /// Row 0 is the starting point at time 0.
    pub rows: Vec<TraceRow>,
    pub status: RunStatus,
    /// Simulated duration of one communication round.
    pub comm_time: f64,
    pub comm_rounds: usize,
    pub f_star: f64,
}

impl TrainingTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,sim_time_s,grad_norm_sq,f_value,total_batch\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.iter, r.sim_time_s, r.grad_norm_sq, r.f_value, r.total_batch);
        }
        out
    }

    /// First simulated time with `f - f* <= gap`.
    pub fn time_to_gap(&self, gap: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.f_value - self.f_star <= gap).map(|r| r.sim_time_s)
    }

    /// Smallest squared gradient norm among the first `k` iterates.
    pub fn min_grad_norm_sq(&self, k: usize) -> f64 {
        self.rows.iter().take(k).map(|r| r.grad_norm_sq).fold(f64::INFINITY, f64::min)
    }

    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("row 0 always exists")
    }
}

/// One iteration: elapsed time, gradients used, update direction.
type Step = (f64, u64, Vec<f64>);

struct Driver<'a> {
    problem: &'a Problem,
    oracle: &'a StochasticOracle,
    counters: Vec<u64>,
    ranks: Vec<usize>,
}

impl<'a> Driver<'a> {
    fn new(problem: &'a Problem, oracle: &'a StochasticOracle, h: &[f64]) -> Self {
        let mut ranks = vec![usize::MAX; h.len()];
        for (r, i) in (0..h.len()).filter(|&i| h[i].is_finite()).enumerate() {
            ranks[i] = r;
        }
        Driver { problem, oracle, counters: vec![0; h.len()], ranks }
    }

    /// Sum of the next `count` draws of `worker` at `x`.
    fn draw_sum(&mut self, x: &[f64], worker: usize, count: u64) -> Vec<f64> {
        let mut sum = vec![0.0; x.len()];
        for _ in 0..count {
            let g = self.oracle.sample(self.problem, x, worker, self.ranks[worker], self.counters[worker]);
            self.counters[worker] += 1;
            sum.iter_mut().zip(g).for_each(|(s, v)| *s += v);
        }
        sum
    }
}

fn grad_norm_sq(f: &Objective, x: &[f64]) -> f64 {
    f.gradient(x).iter().map(|v| v * v).sum()
}

fn drive(
    method: &str,
    subset: Vec<usize>,
    problem: &Problem,
    cfg: &RunConfig,
    comm: (f64, bool),
    mut step: impl FnMut(&[f64]) -> Result<Step, OptimError>,
) -> Result<TrainingTrace, OptimError> {
    let f = &problem.objective;
    let gamma = cfg.gamma.unwrap_or(1.0 / (2.0 * f.l));
    let mut x = f.x0.clone();
    let row = |iter, t, x: &[f64], batch| TraceRow {
        iter,
        sim_time_s: t,
        grad_norm_sq: grad_norm_sq(f, x),
        f_value: f.value(x),
        total_batch: batch,
    };
    let mut rows = vec![row(0, 0.0, &x, 0)];
    let reached = |r: &TraceRow| cfg.target_gap.is_some_and(|g| r.f_value - f.f_star <= g);
    let mut status = if reached(&rows[0]) { RunStatus::TargetReached } else { RunStatus::MaxIters };
    let mut now = 0.0;
    let mut rounds = 0;
    if status == RunStatus::MaxIters {
        for k in 1..=cfg.max_iters {
            let (elapsed, batch, dir) = step(&x)?;
            x.iter_mut().zip(&dir).for_each(|(xj, dj)| *xj -= gamma * dj);
            now += elapsed + comm.0;
            if comm.1 {
                rounds += 1;
            }
            rows.push(row(k, now, &x, batch));
            if reached(rows.last().unwrap()) {
                status = RunStatus::TargetReached;
                break;
            }
            if now > cfg.max_time {
                status = RunStatus::TimeLimit;
                break;
            }
        }
    }
    Ok(TrainingTrace {
        method: method.to_string(),
        subset,
        rows,
        status,
        comm_time: comm.0,
        comm_rounds: rounds,
        f_star: f.f_star,
    })
}

/// Unit multigraph of `g`, reduced by the gcd of multiplicities.
pub fn multigraph(g: &WeightedGraph) -> UnitMultigraph {
    let view = g.undirected();
    unit_multigraph(&view, DEFAULT_MAX_SCALE)
        .unwrap_or_else(|_| UnitMultigraph::best_effort(&view, DEFAULT_MAX_SCALE))
        .reduced()
}

/// Duration of one tree-packing AllReduce of a `d`-vector over `workers`;
/// zero for fewer than two workers.
pub fn allreduce_time(g: &WeightedGraph, workers: &[usize], d: usize, options: AllReduceOptions) -> Result<f64, OptimError> {
    if workers.len() < 2 || d == 0 {
        return Ok(0.0);
    }
    let mg = multigraph(g);
    // more trees than coordinates cannot help
    let packing = pack_with_limit(&mg, workers, Strategy::Auto, d)?;
    Ok(run_allreduce(g, &mg, &packing, d, options)?.completion)
}

fn check_dims(problem: &Problem, g: Option<&WeightedGraph>) -> Result<(), OptimError> {
    if let Some(g) = g {
        if g.workers().is_empty() {
            return Err(SelectionError::NoWorkers.into());
        }
    }
    if problem.objective.dim() == 0 {
        return Err(OptimError::Invalid("objective has dimension 0".into()));
    }
    Ok(())
}

/// Grace SGD on the subset chosen by [`find_fastest_subset`].
pub fn grace_sgd(
    g: &WeightedGraph,
    problem: &Problem,
    oracle: &StochasticOracle,
    params: &ProblemParams,
    cfg: &RunConfig,
) -> Result<TrainingTrace, OptimError> {
    check_dims(problem, Some(g))?;
    let (choice, _) = find_fastest_subset(g, params)?;
    grace_sgd_on(g, &choice.subset, problem, oracle, params, cfg)
}

/// Grace SGD restricted to the workers of `subset`.
pub fn grace_sgd_on(
    g: &WeightedGraph,
    subset: &[usize],
    problem: &Problem,
    oracle: &StochasticOracle,
    params: &ProblemParams,
    cfg: &RunConfig,
) -> Result<TrainingTrace, OptimError> {
    check_dims(problem, Some(g))?;
    let workers: Vec<usize> = subset.iter().copied().filter(|&i| i < g.n() && !g.is_switch(i)).collect();
    if workers.is_empty() {
        return Err(SelectionError::NoWorkers.into());
    }
    let d = problem.objective.dim();
    let comm = allreduce_time(g, &workers, d, cfg.allreduce)?;
    let h: Vec<f64> = workers.iter().map(|&i| g.compute_time(i)).collect();
    let target = grace_target_batch(params);
    let mut driver = Driver::new(problem, oracle, g.compute_times());
    let cap = cfg.max_time.min(1e15);
    drive("grace", workers.clone(), problem, cfg, (comm, workers.len() > 1), |x| {
        let got = collect_batch(&h, target, cap)?;
        let mut sum = vec![0.0; d];
        for (&w, &c) in workers.iter().zip(&got.counts) {
            let part = driver.draw_sum(x, w, c);
            sum.iter_mut().zip(part).for_each(|(s, v)| *s += v);
        }
        let total: u64 = got.counts.iter().sum();
        sum.iter_mut().for_each(|v| *v /= total as f64);
        Ok((got.elapsed, total, sum))
    })
}

/// Leon SGD over all workers: collect until the stop rule holds, then
/// average the per-worker means.
pub fn leon_sgd(
    g: &WeightedGraph,
    problem: &Problem,
    oracle: &StochasticOracle,
    params: &ProblemParams,
    cfg: &RunConfig,
) -> Result<TrainingTrace, OptimError> {
    check_dims(problem, Some(g))?;
    params.validate()?;
    let workers = g.workers();
    let d = problem.objective.dim();
    let comm = allreduce_time(g, &workers, d, cfg.allreduce)?;
    let h: Vec<f64> = workers.iter().map(|&i| g.compute_time(i)).collect();
    let mut driver = Driver::new(problem, oracle, g.compute_times());
    let cap = cfg.max_time.min(1e15);
    drive("leon", workers.clone(), problem, cfg, (comm, workers.len() > 1), |x| {
        let got = run_gradient_computation(&h, |c| leon_stop_rule(c, params), cap)?;
        let n = workers.len() as f64;
        let mut dir = vec![0.0; d];
        for (&w, &c) in workers.iter().zip(&got.counts) {
            let part = driver.draw_sum(x, w, c);
            dir.iter_mut().zip(part).for_each(|(s, v)| *s += v / c as f64);
        }
        dir.iter_mut().for_each(|v| *v /= n);
        Ok((got.elapsed, got.counts.iter().sum(), dir))
    })
}

/// Synchronous SGD: every worker computes `cfg.sync_batch` gradients, then a
/// single-tree streamed aggregation and broadcast through the graph center.
pub fn sync_sgd(
    g: &WeightedGraph,
    problem: &Problem,
    oracle: &StochasticOracle,
    cfg: &RunConfig,
) -> Result<TrainingTrace, OptimError> {
    check_dims(problem, Some(g))?;
    let workers = g.workers();
    let d = problem.objective.dim();
    let comm = if workers.len() > 1 { run_naive_sync_round(g, g.center(), d)?.completion } else { 0.0 };
    let b = cfg.sync_batch.max(1);
    let h_max = workers.iter().map(|&i| g.compute_time(i)).fold(0.0, f64::max);
    let mut driver = Driver::new(problem, oracle, g.compute_times());
    drive("sync", workers.clone(), problem, cfg, (comm, workers.len() > 1), |x| {
        let mut sum = vec![0.0; d];
        for &w in &workers {
            let part = driver.draw_sum(x, w, b);
            sum.iter_mut().zip(part).for_each(|(s, v)| *s += v);
        }
        let total = b * workers.len() as u64;
        sum.iter_mut().for_each(|v| *v /= total as f64);
        Ok((b as f64 * h_max, total, sum))
    })
}

/// SGD on the fastest worker of `h` (node compute times, infinite for
/// switches) with the Grace batch size and no communication.
pub fn hero_sgd(
    h: &[f64],
    problem: &Problem,
    oracle: &StochasticOracle,
    params: &ProblemParams,
    cfg: &RunConfig,
) -> Result<TrainingTrace, OptimError> {
    check_dims(problem, None)?;
    params.validate()?;
    let hero = (0..h.len())
        .filter(|&i| h[i].is_finite())
        .min_by(|&a, &b| h[a].total_cmp(&h[b]).then(a.cmp(&b)))
        .ok_or(SelectionError::NoWorkers)?;
    let batch = grace_target_batch(params);
    let mut driver = Driver::new(problem, oracle, h);
    drive("hero", vec![hero], problem, cfg, (0.0, false), |x| {
        let mut sum = driver.draw_sum(x, hero, batch);
        sum.iter_mut().for_each(|v| *v /= batch as f64);
        Ok((batch as f64 * h[hero], batch, sum))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, topology::generate};

    fn graph(spec: &str) -> WeightedGraph {
        build_graph(&generate(spec).unwrap()).unwrap()
    }

    fn params(d: f64, sigma2: f64, eps: f64) -> ProblemParams {
        ProblemParams::new(d, sigma2, eps, 1.0, 8.0).unwrap()
    }

    #[test]
    fn noiseless_quadratic_converges_in_k_iterations() {
        let p = make_quadratic(1.0, 8.0, 4, 1, 0);
        let o = StochasticOracle::new(0.0, 0, OracleMode::Homogeneous);
        let pr = params(4.0, 0.0, 0.1);
        let cfg = RunConfig { max_iters: 320, ..RunConfig::default() };
        let t = grace_sgd(&graph("ring:4"), &p, &o, &pr, &cfg).unwrap();
        assert!(t.final_row().grad_norm_sq <= 0.1);
        for w in t.rows.windows(2) {
            assert!(w[1].f_value <= w[0].f_value);
            assert!(w[1].sim_time_s > w[0].sim_time_s);
        }
    }

    #[test]
    fn single_worker_has_no_communication() {
        let g = WeightedGraph::new(&[(1, 2.0)], &[]).unwrap();
        let p = make_quadratic(1.0, 8.0, 3, 1, 0);
        let o = StochasticOracle::new(1.0, 3, OracleMode::Homogeneous);
        let pr = params(3.0, 1.0, 0.25);
        let cfg = RunConfig { max_iters: 5, ..RunConfig::default() };
        let t = grace_sgd(&g, &p, &o, &pr, &cfg).unwrap();
        assert_eq!(t.comm_rounds, 0);
        let hero = hero_sgd(g.compute_times(), &p, &o, &pr, &cfg).unwrap();
        assert_eq!(t.rows, hero.rows);
    }

    #[test]
    fn leon_iteration_time_matches_stop_rule() {
        let g = graph("ring:3");
        let p = make_quadratic(1.0, 8.0, 2, 3, 4);
        let o = StochasticOracle::new(0.4, 1, OracleMode::Heterogeneous);
        let pr = params(2.0, 0.4, 0.1);
        let cfg = RunConfig { max_iters: 3, allreduce: AllReduceOptions::default(), ..RunConfig::default() };
        let t = leon_sgd(&g, &p, &o, &pr, &cfg).unwrap();
        // threshold 4: 9 >= 4 (1/2 + 1/2 + 1) once two workers finish twice
        assert_eq!(t.rows[1].total_batch, 5);
        assert!((t.rows[1].sim_time_s - (2.0 + t.comm_time)).abs() < 1e-12);
    }

    #[test]
    fn leon_finds_stationary_point_of_the_mean() {
        let g = graph("ring:3");
        let p = make_quadratic(1.0, 8.0, 2, 3, 4);
        let o = StochasticOracle::new(0.0, 1, OracleMode::Heterogeneous);
        let pr = params(2.0, 0.0, 0.1);
        let cfg = RunConfig { max_iters: 200, ..RunConfig::default() };
        let t = leon_sgd(&g, &p, &o, &pr, &cfg).unwrap();
        assert!(t.final_row().grad_norm_sq < 1e-12);
        assert!((t.final_row().f_value - p.objective.f_star).abs() < 1e-9);
    }

    #[test]
    fn sync_time_is_slowest_worker_plus_round() {
        let g = graph("star:4:hub=worker");
        let p = make_quadratic(1.0, 8.0, 10, 1, 0);
        let o = StochasticOracle::new(0.0, 0, OracleMode::Homogeneous);
        let cfg = RunConfig { max_iters: 2, ..RunConfig::default() };
        let t = sync_sgd(&g, &p, &o, &cfg).unwrap();
        assert!((t.rows[1].sim_time_s - (1.0 + t.comm_time)).abs() < 1e-12);
        assert!((t.comm_time - 20.0).abs() < 1e-9, "{}", t.comm_time);
    }

    #[test]
    fn target_gap_stops_early() {
        let p = make_quadratic(1.0, 8.0, 2, 1, 0);
        let o = StochasticOracle::new(0.0, 0, OracleMode::Homogeneous);
        let cfg = RunConfig { max_iters: 1000, target_gap: Some(1e-3), ..RunConfig::default() };
        let t = hero_sgd(&[1.0], &p, &o, &params(2.0, 0.0, 0.1), &cfg).unwrap();
        assert_eq!(t.status, RunStatus::TargetReached);
        assert!(t.time_to_gap(1e-3).is_some());
    }
}
