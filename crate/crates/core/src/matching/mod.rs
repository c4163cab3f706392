//! Exact combinatorial kernels: maximum-weight bipartite matching, min-cost
//! flow with arc lower bounds, and degree-constrained subgraphs. All three
//! share one successive-shortest-path engine.

mod bipartite;
mod cost;
mod dcs;
mod flow;

pub use bipartite::{max_weight_matching, Matching, WeightedBipartiteGraph};
pub use cost::Cost;
pub use dcs::{dcs_solve, DcsSolution, DegreeBounds};
pub use flow::{min_cost_flow_with_lower_bounds, FlowArc, FlowError, FlowNetwork, FlowSolution};
