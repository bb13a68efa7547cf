//! AllReduce over a tree packing, plus the single-tree and path baselines.
//!
//! Every tree reduces one block of the vector to the pivot and broadcasts the
//! sum back. In streamed mode a tree is one pipelined flow over all of its
//! lanes: a node forwards a coordinate as soon as its children delivered it,
//! which costs one extra coordinate time per level on top of the block.

use std::collections::HashMap;

use serde::Serialize;

use super::engine::{Engine, EngineRun, FlowSpec};
use super::{ArcUsage, EventKind, SimError, SimEvent, SimTrace};
use crate::graph::{UnitMultigraph, WeightedGraph};
use crate::packing::{verify_packing, SteinerTree, TreeArc, TreePacking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AllReduceMode {
    #[default]
    Streamed,
    StoreAndForward,
}

/// `Exact` gives each unit copy of a link `b / multiplicity` of its
/// bandwidth per direction; `Shared` lets all copies contend for `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaneModel {
    #[default]
    Exact,
    Shared,
}

/// `Best` uses the prefix of shallowest trees with the smallest predicted
/// time; `All` uses every tree in packing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TreeChoice {
    #[default]
    Best,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct AllReduceOptions {
    pub mode: AllReduceMode,
    pub lanes: LaneModel,
    pub trees: TreeChoice,
}

/// Arc of a route: `child -> parent` over `link`, unit copy `lane`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Hop {
    child: usize,
    parent: usize,
    link: usize,
    lane: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Route {
    root: usize,
    hops: Vec<Hop>,
    depth: usize,
    /// Largest summed latency from a node to the root.
    tail: f64,
    /// Smallest per-lane rate along the tree.
    rate: f64,
}

impl Route {
    fn new(g: &WeightedGraph, root: usize, hops: Vec<Hop>, lane_rate: impl Fn(&Hop) -> f64) -> Route {
        let parent: HashMap<usize, &Hop> = hops.iter().map(|h| (h.child, h)).collect();
        let mut depth = 0;
        let mut tail: f64 = 0.0;
        for h in &hops {
            let (mut u, mut dep, mut lat) = (h.child, 0, 0.0);
            while let Some(up) = parent.get(&u) {
                dep += 1;
                lat += g.links()[up.link].latency;
                u = up.parent;
            }
            depth = depth.max(dep);
            tail = tail.max(lat);
        }
        let rate = hops.iter().map(lane_rate).fold(f64::INFINITY, f64::min);
        Route { root, hops, depth, tail, rate }
    }

    /// Coordinates a pipelined stream of `block` pushes through the tree.
    fn pipeline_volume(&self, block: usize) -> f64 {
        if self.hops.is_empty() {
            0.0
        } else {
            (block + self.depth - 1) as f64
        }
    }

    fn predicted(&self, block: usize, mode: AllReduceMode) -> f64 {
        if self.hops.is_empty() {
            return 0.0;
        }
        let one_way = match mode {
            AllReduceMode::Streamed => self.pipeline_volume(block) / self.rate + self.tail,
            AllReduceMode::StoreAndForward => self.depth as f64 * block as f64 / self.rate + self.tail,
        };
        2.0 * one_way
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllReducePlan {
    pub d: usize,
    pub pivot: usize,
    pub terminals: Vec<usize>,
    pub options: AllReduceOptions,
    /// Indices of the trees used, block `j` travels on `trees_used[j]`.
    pub trees_used: Vec<usize>,
    pub block: usize,
    /// Fluid-model estimate ignoring contention between trees.
    pub predicted: f64,
    routes: Vec<Route>,
    #[serde(skip)]
    trees: Vec<SteinerTree>,
}

fn check_match(g: &WeightedGraph, mg: &UnitMultigraph, packing: &TreePacking) -> Result<(), SimError> {
    if mg.n() != g.n() || mg.edges().len() != g.links().len() {
        return Err(SimError::Mismatch("multigraph was not built from this graph".into()));
    }
    for (k, (e, l)) in mg.edges().iter().zip(g.links()).enumerate() {
        if (e.u, e.v) != (l.a, l.b) {
            return Err(SimError::Mismatch(format!("edge {k} endpoints differ from link {k}")));
        }
    }
    let report = verify_packing(packing, mg, &packing.terminals);
    if !report.valid {
        let reasons: Vec<String> = report.failures.iter().map(|f| f.to_string()).collect();
        return Err(SimError::Mismatch(reasons.join("; ")));
    }
    Ok(())
}

fn hops_of(tree: &SteinerTree) -> Vec<Hop> {
    tree.arcs
        .iter()
        .map(|&TreeArc { child, parent, edge, lane }| Hop { child, parent, link: edge, lane })
        .collect()
}

/// Chooses trees and block size for reducing a `d`-coordinate vector.
pub fn plan_allreduce(
    g: &WeightedGraph,
    mg: &UnitMultigraph,
    packing: &TreePacking,
    d: usize,
    options: AllReduceOptions,
) -> Result<AllReducePlan, SimError> {
    check_match(g, mg, packing)?;
    let lane_rate = |h: &Hop| match options.lanes {
        LaneModel::Exact => mg.lane_bandwidth(h.link),
        LaneModel::Shared => g.links()[h.link].bandwidth,
    };
    let routes: Vec<Route> =
        packing.trees.iter().map(|t| Route::new(g, t.root, hops_of(t), lane_rate)).collect();
    let p = routes.len();
    let mut plan = AllReducePlan {
        d,
        pivot: packing.pivot,
        terminals: packing.terminals.clone(),
        options,
        trees_used: Vec::new(),
        block: d,
        predicted: 0.0,
        routes: Vec::new(),
        trees: Vec::new(),
    };
    if p == 0 || d == 0 {
        return Ok(plan);
    }
    let order: Vec<usize> = match options.trees {
        TreeChoice::All => (0..p).collect(),
        TreeChoice::Best => {
            let mut o: Vec<usize> = (0..p).collect();
            o.sort_by_key(|&j| (routes[j].depth, j));
            o
        }
    };
    let estimate = |q: usize| {
        let block = d.div_ceil(q);
        let t = order[..q].iter().map(|&j| routes[j].predicted(block, options.mode)).fold(0.0, f64::max);
        (t, block)
    };
    let mut q_best = p.min(d);
    if options.trees == TreeChoice::Best {
        let mut best = estimate(q_best).0;
        for q in (1..p.min(d)).rev() {
            let t = estimate(q).0;
            if t < best {
                best = t;
                q_best = q;
            }
        }
    }
    let (predicted, block) = estimate(q_best);
    plan.trees_used = order[..q_best].to_vec();
    plan.block = block;
    plan.predicted = predicted;
    plan.routes = plan.trees_used.iter().map(|&j| routes[j].clone()).collect();
    plan.trees = plan.trees_used.iter().map(|&j| packing.trees[j].clone()).collect();
    Ok(plan)
}

/// Engine resources keyed by directed lane, audited per directed arc.
struct Lanes<'a> {
    g: &'a WeightedGraph,
    capacity: Box<dyn Fn(usize) -> f64 + 'a>,
    keyed: HashMap<(usize, u64, usize), usize>,
    exact: bool,
}

impl Lanes<'_> {
    fn get(&mut self, engine: &mut Engine, link: usize, lane: u64, from: usize) -> usize {
        let lane = if self.exact { lane } else { 0 };
        let cap = (self.capacity)(link);
        let arc = self.g.arc_from(link, from);
        *self.keyed.entry((link, lane, from)).or_insert_with(|| engine.add_resource(cap, arc))
    }
}

#[derive(Debug, Clone)]
struct FlowTag {
    node: usize,
    link: Option<usize>,
    detail: String,
}

fn assemble(g: &WeightedGraph, engine: &Engine, run: &EngineRun, tags: &[FlowTag], phase: Option<(f64, &str)>) -> SimTrace {
    let mut events = Vec::with_capacity(2 * tags.len() + 2);
    for (f, (r, tag)) in run.records.iter().zip(tags).enumerate() {
        for (time, kind) in [(r.start, EventKind::FlowStart), (r.finish, EventKind::FlowDone)] {
            events.push(SimEvent { time, kind, node: Some(tag.node), edge: tag.link, flow: Some(f), detail: tag.detail.clone() });
        }
    }
    if let Some((t, name)) = phase {
        events.push(SimEvent { time: t, kind: EventKind::PhaseDone, node: None, edge: None, flow: None, detail: name.into() });
    }
    events.push(SimEvent {
        time: run.completion,
        kind: EventKind::PhaseDone,
        node: None,
        edge: None,
        flow: None,
        detail: "complete".into(),
    });
    // stable order: time, then starts before completions, then flow id
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then((a.kind as u8).cmp(&(b.kind as u8))).then(a.flow.cmp(&b.flow)));
    let mut users = vec![0usize; g.arc_count()];
    let mut arc_seen: Vec<Vec<bool>> = vec![Vec::new(); g.arc_count()];
    let res_group = resource_groups(engine);
    for (f, spec) in engine.flows().iter().enumerate() {
        for &r in &spec.resources {
            let a = res_group[r];
            if arc_seen[a].len() <= f {
                arc_seen[a].resize(f + 1, false);
            }
            if !arc_seen[a][f] {
                arc_seen[a][f] = true;
                users[a] += 1;
            }
        }
    }
    let utilization = g
        .arcs()
        .filter(|a| users[a.id] > 0)
        .map(|a| ArcUsage {
            link: a.link,
            from: a.from,
            to: a.to,
            capacity: a.bandwidth,
            peak_rate: run.group_peak[a.id],
            volume: run.group_volume[a.id],
            flows: users[a.id],
        })
        .collect();
    SimTrace { events, utilization, completion: run.completion }
}

fn resource_groups(engine: &Engine) -> Vec<usize> {
    engine.resource_groups().to_vec()
}

/// Reduce and broadcast flows for every route; returns the flow tags and
/// the reduce flows.
fn build_tree_flows(
    engine: &mut Engine,
    lanes: &mut Lanes,
    routes: &[Route],
    block: usize,
    mode: AllReduceMode,
    broadcast: bool,
    g: &WeightedGraph,
) -> (Vec<FlowTag>, Vec<usize>) {
    let mut tags = Vec::new();
    let mut reduce_flows = Vec::new();
    for (j, route) in routes.iter().enumerate() {
        match mode {
            AllReduceMode::Streamed => {
                let up: Vec<usize> = route.hops.iter().map(|h| lanes.get(engine, h.link, h.lane, h.child)).collect();
                let down: Vec<usize> = route.hops.iter().map(|h| lanes.get(engine, h.link, h.lane, h.parent)).collect();
                let volume = route.pipeline_volume(block);
                let r = engine.add_flow(FlowSpec { resources: up, volume, delay: route.tail, deps: vec![] });
                tags.push(FlowTag { node: route.root, link: None, detail: format!("tree={j} reduce") });
                reduce_flows.push(r);
                if !broadcast {
                    continue;
                }
                engine.add_flow(FlowSpec { resources: down, volume, delay: route.tail, deps: vec![r] });
                tags.push(FlowTag { node: route.root, link: None, detail: format!("tree={j} broadcast") });
            }
            AllReduceMode::StoreAndForward => {
                let mut up_flow: HashMap<usize, usize> = HashMap::new();
                let children = children_of(&route.hops);
                // post-order so children exist before their parent's arc
                for &v in &post_order(route.root, &children) {
                    if v == route.root {
                        continue;
                    }
                    let h = route.hops.iter().find(|h| h.child == v).expect("non-root node has an arc");
                    let deps = children.get(&v).map_or(Vec::new(), |cs| cs.iter().map(|c| up_flow[c]).collect());
                    let res = lanes.get(engine, h.link, h.lane, h.child);
                    let f = engine.add_flow(FlowSpec {
                        resources: vec![res],
                        volume: block as f64,
                        delay: g.links()[h.link].latency,
                        deps,
                    });
                    tags.push(FlowTag { node: v, link: Some(h.link), detail: format!("tree={j} reduce") });
                    up_flow.insert(v, f);
                    reduce_flows.push(f);
                }
                let at_root: Vec<usize> =
                    children.get(&route.root).map_or(Vec::new(), |cs| cs.iter().map(|c| up_flow[c]).collect());
                let mut down_flow: HashMap<usize, usize> = HashMap::new();
                let mut stack = if broadcast { vec![route.root] } else { Vec::new() };
                while let Some(u) = stack.pop() {
                    for &c in children.get(&u).into_iter().flatten() {
                        let h = route.hops.iter().find(|h| h.child == c).expect("child arc");
                        let deps = if u == route.root { at_root.clone() } else { vec![down_flow[&u]] };
                        let res = lanes.get(engine, h.link, h.lane, h.parent);
                        let f = engine.add_flow(FlowSpec {
                            resources: vec![res],
                            volume: block as f64,
                            delay: g.links()[h.link].latency,
                            deps,
                        });
                        tags.push(FlowTag { node: c, link: Some(h.link), detail: format!("tree={j} broadcast") });
                        down_flow.insert(c, f);
                        stack.push(c);
                    }
                }
            }
        }
    }
    (tags, reduce_flows)
}

fn children_of(hops: &[Hop]) -> HashMap<usize, Vec<usize>> {
    let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
    for h in hops {
        out.entry(h.parent).or_default().push(h.child);
    }
    for v in out.values_mut() {
        v.sort_unstable();
    }
    out
}

fn post_order(root: usize, children: &HashMap<usize, Vec<usize>>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![(root, false)];
    while let Some((u, expanded)) = stack.pop() {
        if expanded {
            out.push(u);
        } else {
            stack.push((u, true));
            for &c in children.get(&u).into_iter().flatten().rev() {
                stack.push((c, false));
            }
        }
    }
    out
}

impl AllReducePlan {
    /// Simulates the plan on `g` and returns the event trace.
    pub fn execute(&self, g: &WeightedGraph, mg: &UnitMultigraph) -> Result<SimTrace, SimError> {
        if self.routes.is_empty() {
            return Ok(SimTrace::empty());
        }
        let mut engine = Engine::new(g.arc_count());
        let exact = self.options.lanes == LaneModel::Exact;
        let mut lanes = Lanes {
            g,
            capacity: if exact {
                Box::new(|l| mg.lane_bandwidth(l))
            } else {
                Box::new(|l| g.links()[l].bandwidth)
            },
            keyed: HashMap::new(),
            exact,
        };
        let (tags, reduce) = build_tree_flows(&mut engine, &mut lanes, &self.routes, self.block, self.options.mode, true, g);
        let run = engine.run()?;
        let reduce_end = reduce.iter().map(|&f| run.records[f].finish).fold(0.0, f64::max);
        Ok(assemble(g, &engine, &run, &tags, Some((reduce_end, "reduce"))))
    }
}

/// Plans with [`plan_allreduce`] and simulates the result.
pub fn run_allreduce(
    g: &WeightedGraph,
    mg: &UnitMultigraph,
    packing: &TreePacking,
    d: usize,
    options: AllReduceOptions,
) -> Result<SimTrace, SimError> {
    plan_allreduce(g, mg, packing, d, options)?.execute(g, mg)
}

/// Block sums delivered at the pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    pub sum: Vec<f64>,
    /// Vectors aggregated into each block.
    pub contributions: Vec<usize>,
}

/// Sums `inputs` (node, vector) through the planned trees with aggregation
/// at every tree node. Nodes without an input add nothing.
pub fn reduce_blocks(plan: &AllReducePlan, inputs: &[(usize, &[f64])]) -> BlockSums {
    let d = plan.d;
    let mut sum = vec![0.0; d];
    let own: HashMap<usize, &[f64]> = inputs.iter().copied().collect();
    if plan.trees.is_empty() {
        let mut contributions = 0;
        for &(_, v) in inputs {
            contributions += 1;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        return BlockSums { sum, contributions: vec![contributions] };
    }
    let mut contributions = Vec::with_capacity(plan.trees.len());
    for (j, tree) in plan.trees.iter().enumerate() {
        let lo = (j * plan.block).min(d);
        let hi = ((j + 1) * plan.block).min(d);
        let width = hi - lo;
        let mut acc: HashMap<usize, (Vec<f64>, usize)> = HashMap::new();
        let children = tree.children();
        for &v in &tree.post_order() {
            let mut part = vec![0.0; width];
            let mut count = 0;
            if let Some(x) = own.get(&v) {
                part.copy_from_slice(&x[lo..hi]);
                count += 1;
            }
            for c in children.get(&v).into_iter().flatten() {
                let (cv, cc) = acc.remove(c).expect("child visited first");
                for (p, y) in part.iter_mut().zip(&cv) {
                    *p += y;
                }
                count += cc;
            }
            acc.insert(v, (part, count));
        }
        let (total, count) = acc.remove(&tree.root).unwrap_or((vec![0.0; width], 0));
        sum[lo..hi].copy_from_slice(&total);
        contributions.push(count);
    }
    BlockSums { sum, contributions }
}

/// Breadth-first tree of physical arcs towards `pivot`.
fn bfs_route(g: &WeightedGraph, pivot: usize) -> Route {
    let hops = g
        .bfs_tree(pivot)
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|(u, link)| Hop { child: v, parent: u, link, lane: 0 }))
        .collect();
    Route::new(g, pivot, hops, |h| g.links()[h.link].bandwidth)
}

fn physical_lanes(g: &WeightedGraph) -> Lanes<'_> {
    Lanes { g, capacity: Box::new(|l| g.links()[l].bandwidth), keyed: HashMap::new(), exact: false }
}

/// One streamed aggregation to `pivot` and broadcast back over a single
/// breadth-first tree of physical links.
pub fn run_naive_sync_round(g: &WeightedGraph, pivot: usize, d: usize) -> Result<SimTrace, SimError> {
    single_tree_round(g, pivot, d, true)
}

/// Streamed aggregation to `pivot` over the breadth-first tree, no broadcast.
pub fn run_aggregated_reduce(g: &WeightedGraph, pivot: usize, d: usize) -> Result<SimTrace, SimError> {
    single_tree_round(g, pivot, d, false)
}

fn single_tree_round(g: &WeightedGraph, pivot: usize, d: usize, broadcast: bool) -> Result<SimTrace, SimError> {
    if pivot >= g.n() {
        return Err(SimError::BadNode(pivot));
    }
    if g.n() == 1 || d == 0 {
        return Ok(SimTrace::empty());
    }
    let route = bfs_route(g, pivot);
    let mut engine = Engine::new(g.arc_count());
    let mut lanes = physical_lanes(g);
    let routes = [route];
    let (tags, reduce) = build_tree_flows(&mut engine, &mut lanes, &routes, d, AllReduceMode::Streamed, broadcast, g);
    let run = engine.run()?;
    let end = run.records[reduce[0]].finish;
    Ok(assemble(g, &engine, &run, &tags, Some((end, "reduce"))))
}

/// Every source sends its own `d`-vector to `pivot` along the breadth-first
/// tree path, with no aggregation; flows share links max-min fairly.
pub fn run_naive_reduce(g: &WeightedGraph, sources: &[usize], pivot: usize, d: usize) -> Result<SimTrace, SimError> {
    if let Some(&bad) = sources.iter().chain([&pivot]).find(|&&v| v >= g.n()) {
        return Err(SimError::BadNode(bad));
    }
    let parent = g.bfs_tree(pivot);
    let mut engine = Engine::new(g.arc_count());
    let mut lanes = physical_lanes(g);
    let mut tags = Vec::new();
    for &s in sources {
        if s == pivot {
            continue;
        }
        let (mut u, mut resources, mut delay) = (s, Vec::new(), 0.0);
        while let Some((p, link)) = parent[u] {
            resources.push(lanes.get(&mut engine, link, 0, u));
            delay += g.links()[link].latency;
            u = p;
        }
        engine.add_flow(FlowSpec { resources, volume: d as f64, delay, deps: vec![] });
        tags.push(FlowTag { node: s, link: None, detail: format!("source={s}") });
    }
    let run = engine.run()?;
    Ok(assemble(g, &engine, &run, &tags, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, topology::generate, unit_multigraph, DEFAULT_MAX_SCALE};
    use crate::packing::{pack_steiner_trees, Strategy};

    fn setup(spec: &str, workers_only: bool) -> (WeightedGraph, UnitMultigraph, TreePacking) {
        let g = build_graph(&generate(spec).unwrap()).unwrap();
        let mg = unit_multigraph(&g.undirected(), DEFAULT_MAX_SCALE).unwrap().reduced();
        let s: Vec<usize> = if workers_only { g.workers() } else { (0..g.n()).collect() };
        let packing = pack_steiner_trees(&mg, &s, Strategy::Auto).unwrap();
        (g, mg, packing)
    }

    #[test]
    fn star_allreduce_is_two_transfers() {
        let (g, mg, packing) = setup("star:10", true);
        let trace = run_allreduce(&g, &mg, &packing, 1000, AllReduceOptions::default()).unwrap();
        assert!((trace.completion - 2000.0).abs() <= 200.0, "{}", trace.completion);
        assert!(trace.capacity_violations(1e-9).is_empty());
    }

    #[test]
    fn torus_uses_four_trees() {
        let (g, mg, packing) = setup("torus:5x5", false);
        let plan = plan_allreduce(&g, &mg, &packing, 1000, AllReduceOptions::default()).unwrap();
        assert_eq!(plan.trees_used.len(), 4);
        let trace = plan.execute(&g, &mg).unwrap();
        assert!(trace.completion <= 2.2 * 1000.0 / 4.0, "{}", trace.completion);
        assert!(trace.capacity_violations(1e-9).is_empty());
    }

    #[test]
    fn store_and_forward_is_slower_than_streaming() {
        let (g, mg, packing) = setup("ring:6", false);
        let opts = |mode| AllReduceOptions { mode, ..AllReduceOptions::default() };
        let s = run_allreduce(&g, &mg, &packing, 600, opts(AllReduceMode::Streamed)).unwrap();
        let f = run_allreduce(&g, &mg, &packing, 600, opts(AllReduceMode::StoreAndForward)).unwrap();
        assert!(f.completion > s.completion);
    }

    #[test]
    fn block_sums_count_every_contributor_once() {
        let (g, mg, packing) = setup("torus:3x4", false);
        let plan = plan_allreduce(&g, &mg, &packing, 10, AllReduceOptions::default()).unwrap();
        let vectors: Vec<Vec<f64>> = (0..12).map(|i| (0..10).map(|c| (i * 10 + c) as f64).collect()).collect();
        let inputs: Vec<(usize, &[f64])> = vectors.iter().enumerate().map(|(i, v)| (i, v.as_slice())).collect();
        let sums = reduce_blocks(&plan, &inputs);
        assert!(sums.contributions.iter().all(|&c| c == 12));
        for c in 0..10 {
            let direct: f64 = vectors.iter().map(|v| v[c]).sum();
            assert_eq!(sums.sum[c], direct);
        }
    }

    #[test]
    fn aggregation_beats_separate_vectors() {
        let nodes: Vec<_> = (1..=5).map(|i| (i, 1.0)).collect();
        let links = [(1, 2, 2.0, 0.0), (2, 3, 2.0, 0.0), (4, 5, 1.0, 0.0), (1, 5, 1.0, 0.0), (2, 5, 1.0, 0.0)];
        let g = WeightedGraph::new(&nodes, &links).unwrap();
        let naive = run_naive_reduce(&g, &[0, 1, 2, 4], 3, 1000).unwrap();
        assert!((naive.completion - 4000.0).abs() <= 200.0, "{}", naive.completion);
        let agg = run_aggregated_reduce(&g, 3, 1000).unwrap();
        assert!((agg.completion - 1000.0).abs() <= 50.0, "{}", agg.completion);
        let sync = run_naive_sync_round(&g, 3, 1000).unwrap();
        assert!((sync.completion - 2000.0).abs() <= 100.0, "{}", sync.completion);
    }

    #[test]
    fn latency_adds_to_the_tail() {
        let (g, mg, packing) = setup("ring:4:latency=0.5", false);
        let base = run_allreduce(&g, &mg, &packing, 100, AllReduceOptions::default()).unwrap();
        let (g0, mg0, p0) = setup("ring:4", false);
        let none = run_allreduce(&g0, &mg0, &p0, 100, AllReduceOptions::default()).unwrap();
        assert!(base.completion > none.completion);
    }

    #[test]
    fn single_node_round_is_free() {
        let g = WeightedGraph::new(&[(1, 1.0)], &[]).unwrap();
        assert_eq!(run_naive_sync_round(&g, 0, 10).unwrap().completion, 0.0);
    }
}
