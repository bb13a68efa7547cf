use std::path::Path;

use bwopt::optim::multigraph;
use bwopt::packing::{pack_with_limit, Strategy, DEFAULT_MAX_TREES};
use bwopt::sim::{
    run_aggregated_reduce, run_allreduce, run_naive_reduce, run_naive_sync_round, AllReduceMode, AllReduceOptions,
    LaneModel, TreeChoice,
};
use clap::{Args, ValueEnum};

use crate::io::{self, num, Classify, Failure};
use crate::TopologyArgs;

#[derive(Clone, Copy, ValueEnum)]
pub enum Operation {
    /// Tree-packing reduce and broadcast.
    Allreduce,
    /// One reduce and broadcast over a single BFS tree.
    SyncRound,
    /// Every source sends its full vector to the pivot.
    NaiveReduce,
    /// One-way reduce over a BFS tree with in-network summation.
    AggregatedReduce,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Transfer {
    Streamed,
    StoreAndForward,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Lanes {
    Exact,
    Shared,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Trees {
    Best,
    All,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    topo: TopologyArgs,
    #[arg(long, value_enum, default_value_t = Operation::Allreduce)]
    op: Operation,
    /// Vector length in coordinates.
    #[arg(long, default_value_t = 1000)]
    d: usize,
    /// Participating node ids; all workers by default.
    #[arg(long, value_delimiter = ',')]
    terminals: Option<Vec<u32>>,
    /// Root for the single-tree operations; graph center by default.
    #[arg(long)]
    pivot: Option<u32>,
    #[arg(long, value_enum, default_value_t = Transfer::Streamed)]
    transfer: Transfer,
    #[arg(long, value_enum, default_value_t = Lanes::Exact)]
    lanes: Lanes,
    #[arg(long, value_enum, default_value_t = Trees::Best)]
    trees: Trees,
}

pub fn run(args: &SimulateArgs, out: &Path) -> Result<(), Failure> {
    let loaded = io::load_topology(&args.topo)?;
    let g = &loaded.graph;
    let terminals = match &args.terminals {
        Some(ids) => io::indices(g, ids)?,
        None => g.workers(),
    };
    let pivot = match args.pivot {
        Some(id) => io::indices(g, &[id])?[0],
        None => g.center(),
    };
    let trace = match args.op {
        Operation::Allreduce => {
            let options = AllReduceOptions {
                mode: match args.transfer {
                    Transfer::Streamed => AllReduceMode::Streamed,
                    Transfer::StoreAndForward => AllReduceMode::StoreAndForward,
                },
                lanes: match args.lanes {
                    Lanes::Exact => LaneModel::Exact,
                    Lanes::Shared => LaneModel::Shared,
                },
                trees: match args.trees {
                    Trees::Best => TreeChoice::Best,
                    Trees::All => TreeChoice::All,
                },
            };
            let mg = multigraph(g);
            let packing =
                pack_with_limit(&mg, &terminals, Strategy::Auto, args.d.clamp(1, DEFAULT_MAX_TREES)).domain()?;
            let trace = run_allreduce(g, &mg, &packing, args.d, options).domain()?;
            if let Some(alpha) = packing.alpha {
                let w = alpha as f64 / mg.cut_factor();
                println!(
                    "p = {}  min S-cut {}  ideal 2d/cut {} s",
                    packing.p(),
                    num(w),
                    num(2.0 * args.d as f64 / w)
                );
            }
            trace
        }
        Operation::SyncRound => run_naive_sync_round(g, pivot, args.d).domain()?,
        Operation::NaiveReduce => {
            let sources: Vec<usize> = terminals.iter().copied().filter(|&s| s != pivot).collect();
            run_naive_reduce(g, &sources, pivot, args.d).domain()?
        }
        Operation::AggregatedReduce => run_aggregated_reduce(g, pivot, args.d).domain()?,
    };
    println!("completion {} s  events {}", num(trace.completion), trace.events.len());
    let over = trace.capacity_violations(1e-9);
    if !over.is_empty() {
        println!("warning: {} arcs above capacity", over.len());
    }
    io::write_atomic(out, "trace.csv", &trace.to_csv())?;
    let path = io::write_atomic(out, "utilization.json", &trace.utilization_json())?;
    println!("wrote {}", path.with_file_name("trace.csv").display());
    Ok(())
}
