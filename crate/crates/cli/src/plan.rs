use std::fmt::Write as _;
use std::path::Path;

use bwopt::graph::WeightedGraph;
use bwopt::optim::multigraph;
use bwopt::packing::{pack_with_limit, verify_packing, Strategy, DEFAULT_MAX_TREES};
use bwopt::selection::{find_fastest_subset, SelectionTrace, SubsetChoice};
use bwopt::sim::{plan_allreduce, AllReduceOptions};
use serde_json::json;

use crate::io::{self, num, Classify, Failure};
use crate::{ParamArgs, TopologyArgs};

fn braces(g: &WeightedGraph, members: &[usize]) -> String {
    format!("{{{}}}", io::join_ids(&io::ids(g, members)))
}

/// Human-readable subset search, one block per step.
pub fn trace_text(g: &WeightedGraph, trace: &SelectionTrace, choice: &SubsetChoice) -> String {
    let mut out = String::new();
    for s in &trace.steps {
        let comps: Vec<String> = s.components.iter().map(|c| braces(g, c)).collect();
        let _ = writeln!(out, "step {}: w_k = {}", s.k, num(s.weight));
        let _ = writeln!(out, "  components: {}", comps.join(" "));
        let scores: Vec<String> = s.scores.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "  scores: {}", scores.join(" "));
        let _ = writeln!(
            out,
            "  best: {} score {}  running best {} at step {}",
            comps[s.best],
            num(s.best_score),
            num(s.running_score),
            s.running_k
        );
        if let Some(e) = s.removed {
            let _ = writeln!(out, "  remove cut-tree edge {}-{} (weight {})", g.id(e.u), g.id(e.v), num(e.weight));
        }
    }
    let _ = writeln!(
        out,
        "chosen: {} at step {} (w_k = {}, score {}, m = {})",
        braces(g, &choice.subset),
        choice.k,
        num(choice.weight),
        num(choice.score),
        choice.m
    );
    out
}

pub fn run(topo: &TopologyArgs, p: &ParamArgs, terminals: Option<&[u32]>, out: &Path) -> Result<(), Failure> {
    let loaded = io::load_topology(topo)?;
    let g = &loaded.graph;
    let params = io::params(p)?;
    let (choice, trace) = find_fastest_subset(g, &params).domain()?;
    let text = trace_text(g, &trace, &choice);
    print!("{text}");

    let s = match terminals {
        Some(ids) => {
            let mut s = io::indices(g, ids)?;
            s.sort_unstable();
            s.dedup();
            s
        }
        None => choice.subset.clone(),
    };
    let mg = multigraph(g);
    let d = p.d.ceil().max(1.0) as usize;
    let packing = pack_with_limit(&mg, &s, Strategy::Auto, d.min(DEFAULT_MAX_TREES)).domain()?;
    let report = verify_packing(&packing, &mg, &s);
    let allreduce = if s.len() < 2 {
        println!("single worker {}: no communication needed, packing is empty", braces(g, &s));
        serde_json::Value::Null
    } else {
        let plan = plan_allreduce(g, &mg, &packing, d, AllReduceOptions::default()).domain()?;
        println!(
            "packing for {}: p = {}  alpha = {}  construction {}  valid {}",
            braces(g, &s),
            packing.p(),
            packing.alpha.map_or("-".into(), |a| a.to_string()),
            packing.construction,
            report.valid
        );
        println!("allreduce: {} trees, block {}, predicted {} s", plan.trees_used.len(), plan.block, num(plan.predicted));
        json!({ "trees_used": plan.trees_used, "block": plan.block, "predicted_s": plan.predicted })
    };

    let id = |i: usize| g.id(i);
    let trees: Vec<_> = packing
        .trees
        .iter()
        .map(|t| {
            json!({
                "root": id(t.root),
                "depth": t.depth(),
                "arcs": t.arcs.iter().map(|a| json!({ "child": id(a.child), "parent": id(a.parent), "lane": a.lane })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let steps: Vec<_> = trace
        .steps
        .iter()
        .map(|s| {
            json!({
                "k": s.k,
                "w_k": s.weight,
                "components": s.components.iter().map(|c| io::ids(g, c)).collect::<Vec<_>>(),
                "scores": s.scores,
                "best": s.best,
                "best_score": s.best_score,
                "removed": s.removed.map(|e| json!({ "u": id(e.u), "v": id(e.v), "weight": e.weight })),
            })
        })
        .collect();
    let bundle = json!({
        "nodes": g.ids(),
        "cut_tree": trace.tree.edges.iter().map(|e| json!({ "u": id(e.u), "v": id(e.v), "weight": e.weight })).collect::<Vec<_>>(),
        "selection": steps,
        "choice": {
            "subset": io::ids(g, &choice.subset),
            "k": choice.k,
            "score": choice.score,
            "w_k": choice.weight,
            "m": choice.m,
        },
        "packing": {
            "terminals": io::ids(g, &packing.terminals),
            "pivot": id(packing.pivot),
            "kind": packing.kind,
            "construction": packing.construction,
            "p": packing.p(),
            "alpha": packing.alpha,
            "valid": report.valid,
            "trees": trees,
        },
        "allreduce": allreduce,
    });
    io::write_atomic(out, "plan.json", &serde_json::to_string_pretty(&bundle).usage()?)?;
    let path = io::write_atomic(out, "selection_trace.txt", &text)?;
    println!("wrote {}", path.with_file_name("plan.json").display());
    Ok(())
}
