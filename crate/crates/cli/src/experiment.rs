use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bwopt::graph::WeightedGraph;
use bwopt::optim::{
    grace_sgd, grace_sgd_on, hero_sgd, leon_sgd, make_objective, sync_sgd, ObjectiveKind, OracleMode, Problem,
    RunConfig, RunStatus, StochasticOracle, TrainingTrace,
};
use bwopt::selection::ProblemParams;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{self, usage, Classify, Failure};

pub const METHODS: &[&str] = &["grace", "grace-all", "grace-subset", "leon", "sync", "hero"];

/// Everything an experiment needs; loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    #[serde(rename = "gen", skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub methods: Vec<String>,
    /// Node ids for `grace-subset`.
    pub subset: Vec<u32>,
    pub objective: String,
    pub dim: usize,
    pub components: usize,
    pub objective_seed: u64,
    pub sigma2: f64,
    pub eps: f64,
    pub seeds: Vec<u64>,
    pub iters: usize,
    /// Stop at this fraction of the initial gap; 0 disables.
    pub target_frac: f64,
    pub max_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub sync_batch: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: None,
            generator: None,
            methods: vec!["grace".into(), "sync".into(), "hero".into()],
            subset: Vec::new(),
            objective: "quadratic".into(),
            dim: 16,
            components: 1,
            objective_seed: 0,
            sigma2: 1.0,
            eps: 0.01,
            seeds: Vec::new(),
            iters: 100,
            target_frac: 0.0,
            max_time: f64::INFINITY,
            gamma: None,
            sync_batch: 1,
        }
    }
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// Topology TOML file.
    topology: Option<PathBuf>,
    #[arg(long = "gen", conflicts_with = "topology")]
    generator: Option<String>,
    /// TOML experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated: grace, grace-all, grace-subset, leon, sync, hero.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Node ids for grace-subset.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<u32>>,
    /// quadratic or logreg.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Heterogeneous components, assigned to workers by rank.
    #[arg(long)]
    components: Option<usize>,
    #[arg(long)]
    objective_seed: Option<u64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Oracle seeds; defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    iters: Option<usize>,
    /// Stop once the gap falls to this fraction of the initial gap.
    #[arg(long)]
    target_frac: Option<f64>,
    /// Simulated-time budget in seconds.
    #[arg(long)]
    max_time: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Gradients per worker per synchronous round.
    #[arg(long)]
    sync_batch: Option<u64>,
}

impl ExperimentArgs {
    fn resolve(&self, seed: u64) -> Result<ExperimentConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).usage()?;
                toml::from_str(&text).with_context(|| format!("invalid config {}", path.display())).usage()?
            }
            None => ExperimentConfig::default(),
        };
        if self.topology.is_some() || self.generator.is_some() {
            c.topology = self.topology.clone();
            c.generator = self.generator.clone();
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { c.$f = v.clone(); })* };
        }
        take!(methods, subset, objective, dim, components, objective_seed, sigma2, eps, seeds, iters, target_frac, max_time, sync_batch);
        if self.gamma.is_some() {
            c.gamma = self.gamma;
        }
        if c.seeds.is_empty() {
            c.seeds = vec![seed];
        }
        Ok(c)
    }
}

fn status(s: RunStatus) -> &'static str {
    match s {
        RunStatus::MaxIters => "max_iters",
        RunStatus::TargetReached => "target_reached",
        RunStatus::TimeLimit => "time_limit",
    }
}

struct Setup<'a> {
    g: &'a WeightedGraph,
    problem: &'a Problem,
    params: ProblemParams,
    cfg: RunConfig,
    mode: OracleMode,
    sigma2: f64,
    subset: Vec<usize>,
}

fn run_cell(s: &Setup, method: &str, seed: u64) -> Result<TrainingTrace, Failure> {
    let oracle = StochasticOracle::new(s.sigma2, seed, s.mode);
    let (g, p, prm, cfg) = (s.g, s.problem, &s.params, &s.cfg);
    let mut t = match method {
        "grace" => grace_sgd(g, p, &oracle, prm, cfg),
        "grace-all" => grace_sgd_on(g, &g.workers(), p, &oracle, prm, cfg),
        "grace-subset" => grace_sgd_on(g, &s.subset, p, &oracle, prm, cfg),
        "leon" => leon_sgd(g, p, &oracle, prm, cfg),
        "sync" => sync_sgd(g, p, &oracle, cfg),
        "hero" => hero_sgd(g.compute_times(), p, &oracle, prm, cfg),
        other => return Err(usage(format!("unknown method {other}"))),
    }
    .with_context(|| format!("{method} seed {seed}"))
    .domain()?;
    t.method = method.to_string();
    Ok(t)
}

pub fn run(args: &ExperimentArgs, seed: u64, out: &Path) -> Result<(), Failure> {
    let c = args.resolve(seed)?;
    if let Some(m) = c.methods.iter().find(|m| !METHODS.contains(&m.as_str())) {
        return Err(usage(format!("unknown method {m} ({})", METHODS.join(", "))));
    }
    if c.methods.is_empty() {
        return Err(usage("no methods given"));
    }
    if c.methods.iter().any(|m| m == "grace-subset") && c.subset.is_empty() {
        return Err(usage("grace-subset needs --subset"));
    }
    let loaded = io::load(c.topology.as_deref(), c.generator.as_deref())?;
    let g = &loaded.graph;
    let kind: ObjectiveKind = c.objective.parse().usage()?;
    let problem = make_objective(kind, c.dim, c.components, c.objective_seed).domain()?;
    let gap0 = problem.objective.gap();
    let params = ProblemParams::new(c.dim as f64, c.sigma2, c.eps, problem.objective.l, gap0).domain()?;
    let cfg = RunConfig {
        max_iters: c.iters,
        gamma: c.gamma,
        max_time: c.max_time,
        target_gap: (c.target_frac > 0.0).then_some(c.target_frac * gap0),
        sync_batch: c.sync_batch,
        ..RunConfig::default()
    };
    let setup = Setup {
        g,
        problem: &problem,
        params,
        cfg,
        mode: if c.components > 1 { OracleMode::Heterogeneous } else { OracleMode::Homogeneous },
        sigma2: c.sigma2,
        subset: io::indices(g, &c.subset)?,
    };

    let cells: Vec<(&str, u64)> =
        c.methods.iter().flat_map(|m| c.seeds.iter().map(move |&s| (m.as_str(), s))).collect();
    let traces: Vec<TrainingTrace> = cells
        .par_iter()
        .map(|&(m, s)| {
            let t = run_cell(&setup, m, s)?;
            io::write_atomic(out, &format!("runs/{m}_seed{s}.csv"), &t.to_csv())?;
            Ok(t)
        })
        .collect::<Result<_, Failure>>()?;

    let target = cfg.target_gap;
    let mut summary = String::from(
        "method,seed,status,iterations,sim_time_s,final_gap,time_to_target_s,min_grad_norm_sq,workers,comm_time_s\n",
    );
    let mut long = String::from("method,seed,iter,sim_time_s,grad_norm_sq,f_value,total_batch\n");
    let mut rows = Vec::new();
    for (&(m, s), t) in cells.iter().zip(&traces) {
        let last = t.final_row();
        let reach = target.and_then(|gap| t.time_to_gap(gap));
        let _ = writeln!(
            summary,
            "{m},{s},{},{},{},{},{},{},{},{}",
            status(t.status),
            last.iter,
            last.sim_time_s,
            last.f_value - t.f_star,
            reach.map_or(String::new(), |x| x.to_string()),
            t.min_grad_norm_sq(t.rows.len()),
            t.subset.len(),
            t.comm_time
        );
        for r in &t.rows {
            let _ = writeln!(long, "{m},{s},{},{},{},{},{}", r.iter, r.sim_time_s, r.grad_norm_sq, r.f_value, r.total_batch);
        }
        rows.push(vec![
            m.to_string(),
            s.to_string(),
            status(t.status).to_string(),
            last.iter.to_string(),
            io::num(last.sim_time_s),
            io::num(last.f_value - t.f_star),
            t.subset.len().to_string(),
        ]);
    }
    print!("{}", io::table(&["method", "seed", "status", "iters", "time_s", "gap", "workers"], &rows));
    io::write_atomic(out, "long.csv", &long)?;
    io::write_atomic(out, "config.toml", &toml::to_string(&c).usage()?)?;
    let path = io::write_atomic(out, "summary.csv", &summary)?;
    println!("wrote {}", path.display());
    Ok(())
}
