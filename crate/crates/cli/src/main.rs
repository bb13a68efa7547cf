//! `bwopt`: analyze topologies, plan subsets and packings, simulate
//! communication, and run training experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod analyze;
mod experiment;
mod io;
mod plan;
mod simulate;

use io::Failure;

#[derive(Parser)]
#[command(name = "bwopt", version, about = "Bandwidth-aware planning and simulation of decentralized SGD")]
struct Cli {
    /// Output directory for exported files.
    #[arg(long, global = true, env = "BWOPT_OUT_DIR", default_value = "bwopt-out")]
    out: PathBuf,
    /// Seed for stochastic runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Iteration count convention for complexities.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Constants)]
    mode: ModeArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Constants,
    Asymptotic,
}

impl From<ModeArg> for bwopt::analyzer::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Constants => bwopt::analyzer::Mode::Constants,
            ModeArg::Asymptotic => bwopt::analyzer::Mode::Asymptotic,
        }
    }
}

#[derive(Args, Clone)]
struct TopologyArgs {
    /// Topology TOML file.
    topology: Option<PathBuf>,
    /// Built-in generator instead of a file, e.g. `torus:5x5:b=1`.
    #[arg(long = "gen", conflicts_with = "topology")]
    generator: Option<String>,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    /// Vector dimension d.
    #[arg(long, default_value_t = 1000.0)]
    d: f64,
    /// Gradient noise variance.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Target stationarity eps.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Smoothness constant L.
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
    /// Initial gap f(x0) - f*.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Time complexities of every method and the sparse-graph trade-offs.
    Analyze {
        #[command(flatten)]
        topo: TopologyArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Cut tree, subset search trace, Steiner packing and AllReduce schedule.
    Plan {
        #[command(flatten)]
        topo: TopologyArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Pack these node ids instead of the selected subset.
        #[arg(long, value_delimiter = ',')]
        terminals: Option<Vec<u32>>,
    },
    /// Simulate one communication operation and export its event trace.
    Simulate(Box<simulate::SimulateArgs>),
    /// Run training methods over seeds and export traces and a summary.
    Experiment(Box<experiment::ExperimentArgs>),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mode = cli.mode.into();
    match cli.command {
        Command::Analyze { topo, params } => analyze::run(&topo, &params, mode, &cli.out),
        Command::Plan { topo, params, terminals } => plan::run(&topo, &params, terminals.as_deref(), &cli.out),
        Command::Simulate(args) => simulate::run(&args, &cli.out),
        Command::Experiment(args) => experiment::run(&args, cli.seed, &cli.out),
    }
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn message(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !parts.last().is_some_and(|p| p.ends_with(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", message(f.error()));
            ExitCode::from(f.code())
        }
    }
}
