//! Clearing engine for water-rights markets.
//!
//! Sellers hold ordered water units they value individually; buyers demand
//! ordered units. The crate computes welfare-maximizing trading assignments,
//! fairness-constrained variants, leximin-fair single-seller allocations,
//! hardness gadgets with exhaustive verifiers, and the synthetic and
//! water-rights experiment pipelines.

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod io;
pub mod leximin;
pub mod lp;
pub mod matching;
pub mod model;
pub mod reductions;
pub mod value;
pub mod verify;
pub mod welfare;

pub use error::{Error, Result};
pub use model::{
    build_resources_needs_graph, satisfaction_vector, total_value, validate_assignment, welfare, Agent, AgentId,
    MarketInstance, Pair, ResourcesNeedsGraph, SatisfactionVector, Side, TradingAssignment, UnitRef, Violation,
};
pub use value::Value;
