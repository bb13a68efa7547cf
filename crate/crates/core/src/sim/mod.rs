//! Deterministic simulation of gradient computation and bandwidth-limited
//! communication under a fluid flow model.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub mod allreduce;
pub mod compute;
pub mod engine;

pub use allreduce::{
    plan_allreduce, reduce_blocks, run_aggregated_reduce, run_allreduce, run_naive_reduce, run_naive_sync_round, AllReduceMode,
    AllReduceOptions, AllReducePlan, BlockSums, LaneModel, TreeChoice,
};
pub use compute::{collect_batch, run_gradient_computation, Collection};
pub use engine::max_min_rates as shared_edge_rates;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("packing does not match the graph: {0}")]
    Mismatch(String),
    #[error("stop condition not reached within {max_time} simulated seconds")]
    Timeout { max_time: f64 },
    #[error("flows wait on each other and can never start")]
    Deadlock,
    #[error("node index {0} out of range")]
    BadNode(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    GradientDone,
    FlowStart,
    FlowDone,
    PhaseDone,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::GradientDone => "gradient_done",
            EventKind::FlowStart => "flow_start",
            EventKind::FlowDone => "flow_done",
            EventKind::PhaseDone => "phase_done",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    pub node: Option<usize>,
    pub edge: Option<usize>,
    pub flow: Option<usize>,
    pub detail: String,
}

/// Load seen by one directed physical arc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcUsage {
    pub link: usize,
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub peak_rate: f64,
    pub volume: f64,
    /// Distinct flows that used the arc.
    pub flows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub events: Vec<SimEvent>,
    pub utilization: Vec<ArcUsage>,
    pub completion: f64,
}

impl SimTrace {
    pub fn empty() -> SimTrace {
        SimTrace { events: Vec::new(), utilization: Vec::new(), completion: 0.0 }
    }

    /// Arcs whose peak aggregate rate exceeds capacity by more than `rel`.
    pub fn capacity_violations(&self, rel: f64) -> Vec<&ArcUsage> {
        self.utilization.iter().filter(|u| u.peak_rate > u.capacity * (1.0 + rel)).collect()
    }

    /// `time,event_kind,node,edge,flow_id,detail` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,event_kind,node,edge,flow_id,detail\n");
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        for e in &self.events {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.time,
                e.kind.as_str(),
                opt(e.node),
                opt(e.edge),
                opt(e.flow),
                e.detail.replace(',', ";")
            );
        }
        out
    }

    pub fn utilization_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            completion: f64,
            arcs: &'a [ArcUsage],
        }
        serde_json::to_string_pretty(&Summary { completion: self.completion, arcs: &self.utilization })
            .expect("plain data serializes")
    }
}
