//! Builders for the three formulations (flow, cycle elimination, partition),
//! the cycle separation oracle, solution extraction, and MPS export.

mod cycle;
mod flow;
mod mps;
mod partition;

pub use cycle::{
    build_cycle_minmax, cycle_cut_callback, cycle_cut_row, cycle_lp_bound, separate_cycle,
    CycleModel,
};
pub use flow::{
    build_flow_maxmin, build_flow_minmax, extract_forest_from_flow, flow_warm_start, FlowModel,
    MaxMinMode,
};
pub use mps::{export_mps_file, read_mps, write_mps};
pub use partition::{build_rmp, rules_admit, solve_rmp_integer, RmpModel};
pub(crate) use partition::split_to_k_trees;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("upper bound {given} below the valid minimum {required}")]
    BadBound { given: u64, required: u64 },
    #[error("solution does not decode to a spanning k-forest: {0}")]
    InconsistentSolution(String),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("MPS parse error at line {line}: {msg}")]
    MpsParse { line: usize, msg: String },
}
