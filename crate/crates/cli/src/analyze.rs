use std::fmt::Write as _;
use std::path::Path;

use bwopt::analyzer::{
    grace_complexity, hero_sgd_complexity, latency_adjusted, leon_closed_form, leon_complexity, sync_sgd_complexity,
    topology_closed_form, tradeoff_bounds, ComplexityReport, Mode, TopologyParams,
};

use crate::io::{self, num, Classify, Failure};
use crate::{ParamArgs, TopologyArgs};

/// Closed-form parameters of a generator string, when one applies.
pub fn closed_form_params(spec: &str) -> Option<TopologyParams> {
    let mut parts = spec.split(':');
    let kind = parts.next()?;
    let dims: Vec<usize> = parts.next()?.split('x').map(|s| s.parse().ok()).collect::<Option<_>>()?;
    let mut opt = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=')?;
        opt.insert(k.trim(), v.trim());
    }
    let get = |key: &str, default: f64| -> Option<f64> {
        match opt.get(key) {
            None => Some(default),
            Some(&"inf") => Some(f64::INFINITY),
            Some(v) => v.parse().ok(),
        }
    };
    let (b, h) = (get("b", 1.0)?, get("h", 1.0)?);
    match (kind, dims.as_slice()) {
        ("star", [n]) if opt.get("hub").is_none_or(|&v| v == "switch") => Some(TopologyParams::Star { n: *n, b, h }),
        ("ring", [n]) => Some(TopologyParams::Torus { sides: vec![*n], b, h }),
        ("torus", sides) => Some(TopologyParams::Torus { sides: sides.to_vec(), b, h }),
        ("complete" | "all-to-all", [n]) => Some(TopologyParams::AllToAll { n: *n, b, h }),
        ("kclusters", [k, m]) => Some(TopologyParams::KClusters {
            k: *k,
            m: *m,
            fast: get("fast", 1.0)?,
            slow: get("slow", 1.0)?,
            hs: vec![h; *k],
        }),
        _ => None,
    }
}

fn csv_rows(out: &mut String, r: &ComplexityReport) {
    for (i, reg) in r.regimes.iter().enumerate() {
        let t = &reg.terms;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            reg.label,
            reg.workers,
            t.communication,
            t.statistical,
            t.deterministic,
            t.latency,
            reg.total,
            i == r.winner
        );
    }
}

pub fn run(topo: &TopologyArgs, p: &ParamArgs, mode: Mode, out: &Path) -> Result<(), Failure> {
    let loaded = io::load_topology(topo)?;
    let g = &loaded.graph;
    let params = io::params(p)?;

    let grace = grace_complexity(g, &params, mode).domain()?;
    let mut reports = vec![grace.clone()];
    if g.max_latency() > 0.0 {
        let mut adj = latency_adjusted(&grace, g.max_latency());
        adj.method = "grace+latency".into();
        reports.push(adj);
    }
    reports.push(leon_complexity(g, &params, mode).domain()?);
    reports.push(sync_sgd_complexity(g, &params, mode).domain()?);
    reports.push(hero_sgd_complexity(&params, g.compute_times(), mode).domain()?);
    let mut notes = Vec::new();
    if let Some(tp) = loaded.generator.as_deref().and_then(closed_form_params) {
        match (topology_closed_form(&tp, &params, mode), leon_closed_form(&tp, &params, mode)) {
            (Ok(a), Ok(b)) => reports.extend([a, b]),
            (Err(e), _) | (_, Err(e)) => notes.push(format!("closed form skipped: {e}")),
        }
    }

    let mut csv = String::from("method,regime,workers,communication,statistical,deterministic,latency,total,winner\n");
    let mut rows = Vec::new();
    for r in &reports {
        csv_rows(&mut csv, r);
        for (i, reg) in r.regimes.iter().enumerate() {
            let t = &reg.terms;
            rows.push(vec![
                r.method.clone(),
                reg.label.clone(),
                reg.workers.to_string(),
                num(t.communication),
                num(t.statistical),
                num(t.deterministic),
                num(t.latency),
                num(reg.total),
                if i == r.winner { "*".into() } else { String::new() },
            ]);
        }
    }
    println!("nodes {}  workers {}  links {}  K {}", g.n(), g.workers().len(), g.links().len(), num(grace.iterations));
    print!(
        "{}",
        io::table(&["method", "regime", "workers", "comm", "stat", "det", "latency", "total", "best"], &rows)
    );
    let path = io::write_atomic(out, "analysis.csv", &csv)?;

    match tradeoff_bounds(g, &params, mode) {
        Ok(t) => {
            println!(
                "trade-off: bounded degree {}  degree rank {} (m={})  degree count {} (m={})  hero {}",
                num(t.bounded_degree),
                num(t.by_degree_rank),
                t.by_degree_rank_m,
                num(t.by_degree_count),
                t.by_degree_count_m,
                num(t.hero)
            );
            let body = serde_json::to_string_pretty(&t).usage()?;
            io::write_atomic(out, "tradeoff.json", &body)?;
        }
        Err(e) => notes.push(format!("trade-off bounds skipped: {e}")),
    }
    for n in notes {
        println!("note: {n}");
    }
    println!("wrote {}", path.display());
    Ok(())
}
