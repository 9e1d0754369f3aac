//! Solvers for the edge-weighted balanced spanning forest problems.
//!
//! Given a connected graph with non-negative integer edge weights and an
//! integer `k`, a *spanning k-forest* is a set of `k` vertex-disjoint trees
//! whose vertex sets partition the vertices. The min-max problem asks for a
//! spanning k-forest minimizing the weight of the heaviest tree; the max-min
//! variant maximizes the weight of the lightest tree.
//!
//! The crate provides, roughly bottom-up:
//!
//! * [`graph`] — graph types, spanning trees, connectivity, max-flow/min-cut;
//! * [`instances`] — a seeded random instance generator and text file formats;
//! * [`oracle`] — brute-force exact solvers for tiny instances, used as
//!   ground truth by every other solver's tests;
//! * [`heuristics`] — a tight k-approximation, an exact tree subroutine and a
//!   best-first improvement search that doubles as a column source;
//! * [`lp`] and [`mip`] — a self-contained bounded-variable simplex solver
//!   and a branch-and-bound MIP engine with lazy cut callbacks;
//! * [`models`] — the flow, cycle-elimination and partition formulations,
//!   cut separation, and MPS export;
//! * [`pricing`] — reduced costs and the budgeted prize-collecting Steiner
//!   tree pricing subproblems;
//! * [`bnp`] — column generation and Ryan-Foster branch-and-price;
//! * [`bench`] — run records, CSV emission and performance profiles.
//!
//! ```
//! use bsf::graph::WeightedGraph;
//! use bsf::oracle::exact_minmax;
//!
//! let g = WeightedGraph::new(4, &[(0, 1, 5), (1, 2, 1), (2, 3, 5)]).unwrap();
//! let (value, forest) = exact_minmax(&g, 2).unwrap();
//! assert_eq!(value, 5);
//! assert_eq!(forest.trees().len(), 2);
//! ```

pub mod bench;
pub mod bnp;
pub mod graph;
pub mod heuristics;
pub mod instances;
pub mod lp;
pub mod mip;
pub mod models;
pub mod oracle;
pub mod pricing;
pub mod rng;

// The guide chapters double as doc-tests so their snippets stay compilable.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    mod heuristics {}
    #[doc = include_str!("../../../book/src/linear-programming.md")]
    mod linear_programming {}
    #[doc = include_str!("../../../book/src/formulations.md")]
    mod formulations {}
    #[doc = include_str!("../../../book/src/branch-and-price.md")]
    mod branch_and_price {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
