//! Welfare maximization under lower bounds on the units received by groups
//! of buyers.
//!
//! The general pipeline solves the LP relaxation over resources–needs edges,
//! pushes fractional mass onto each agent's earliest units, and rounds with
//! degree-preserving dependent rounding. When every group is a single buyer
//! the problem is a bounded b-matching and [`solve_fair_singleton`] solves it
//! exactly.

mod normalize;
mod rounding;
mod singleton;

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpOutcome, Sense};
use crate::model::{build_resources_needs_graph, welfare, AgentId, MarketInstance, ResourcesNeedsGraph, TradingAssignment};
use crate::value::{Value, SCALE};
use crate::welfare::{brute_force_exists, repair_prefix, BruteForceOptions};

pub use normalize::normalize_prefix_fractional;
pub use rounding::{dependent_round, RoundedSolution};
pub use singleton::{singleton_bounds, solve_fair_singleton};

/// Default limit on the number of groups in a spec.
pub const DEFAULT_GROUP_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub buyers: Vec<AgentId>,
    pub r: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub groups: Vec<Group>,
}

/// A group with buyer ids resolved to indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedGroup {
    pub buyers: BTreeSet<usize>,
    pub r: u32,
}

impl ResolvedGroup {
    pub fn is_singleton(&self) -> bool {
        self.buyers.len() == 1
    }

    pub fn total(&self, buyer_counts: &[usize]) -> usize {
        self.buyers.iter().map(|&b| buyer_counts[b]).sum()
    }
}

impl FairnessSpec {
    pub fn new(groups: Vec<Group>) -> Self {
        FairnessSpec { groups }
    }

    /// Checks the spec against `instance` and maps ids to buyer indices.
    pub fn resolve(&self, instance: &MarketInstance, cap: usize) -> Result<Vec<ResolvedGroup>> {
        if self.groups.len() > cap {
            return Err(Error::CapExceeded { what: "fairness groups", size: self.groups.len(), cap });
        }
        let mut problems = Vec::new();
        let mut out = Vec::with_capacity(self.groups.len());
        for (g, group) in self.groups.iter().enumerate() {
            if group.buyers.is_empty() {
                problems.push(format!("group {} has no buyers", g + 1));
            }
            if group.r == 0 {
                problems.push(format!("group {} has r = 0, must be at least 1", g + 1));
            }
            let mut buyers = BTreeSet::new();
            for id in &group.buyers {
                match instance.buyer_index(id) {
                    Some(b) => {
                        buyers.insert(b);
                    }
                    None => problems.push(format!("group {} names unknown buyer {id}", g + 1)),
                }
            }
            out.push(ResolvedGroup { buyers, r: group.r });
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Validation(problems))
        }
    }
}

/// The fairness LP over the edges of the resources–needs graph.
///
/// Variable `e` is the mass on graph edge `e`. The objective is in
/// micro-units. Rows are: one `≤ 1` per seller unit with an edge, one
/// `≤ 1` per buyer unit with an edge, then one `≥ r` per group.
#[derive(Clone, Debug)]
pub struct FairnessLp {
    pub graph: ResourcesNeedsGraph,
    pub groups: Vec<ResolvedGroup>,
    pub program: LinearProgram<BigRational>,
}

pub fn build_fairness_lp(instance: &MarketInstance, spec: &FairnessSpec) -> Result<FairnessLp> {
    let groups = spec.resolve(instance, DEFAULT_GROUP_CAP)?;
    Ok(build_lp_for(instance, groups))
}

fn build_lp_for(instance: &MarketInstance, groups: Vec<ResolvedGroup>) -> FairnessLp {
    let graph = build_resources_needs_graph(instance);
    let edges = graph.edges();
    let int = |x: i64| BigRational::from_integer(BigInt::from(x));
    let objective = edges.iter().map(|e| int(e.weight.micros())).collect();
    let mut program = LinearProgram::new(edges.len(), objective);

    let mut by_seller = vec![Vec::new(); graph.seller_nodes().len()];
    let mut by_buyer = vec![Vec::new(); graph.buyer_nodes().len()];
    for e in 0..edges.len() {
        let (l, r) = graph.endpoints(e);
        by_seller[l].push(e);
        by_buyer[r].push(e);
    }
    for incident in by_seller.iter().chain(&by_buyer) {
        if !incident.is_empty() {
            program.add(incident.iter().map(|&e| (e, int(1))).collect(), Sense::Le, int(1));
        }
    }
    for g in &groups {
        let coeffs = (0..edges.len()).filter(|&e| g.buyers.contains(&edges[e].buyer.agent)).map(|e| (e, int(1))).collect();
        program.add(coeffs, Sense::Ge, int(i64::from(g.r)));
    }
    FairnessLp { graph, groups, program }
}

/// Mass per resources–needs edge, with the objective in value units.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    pub z: Vec<BigRational>,
    pub objective: BigRational,
}

impl FractionalSolution {
    /// Objective Σ α·z recomputed from `z`, in value units.
    pub fn objective_of(z: &[BigRational], graph: &ResourcesNeedsGraph) -> BigRational {
        let total: BigRational = z
            .iter()
            .zip(graph.edges())
            .map(|(x, e)| x * BigRational::from_integer(BigInt::from(e.weight.micros())))
            .sum();
        total / BigRational::from_integer(BigInt::from(SCALE))
    }

    pub fn is_integral(&self) -> bool {
        self.z.iter().all(|x| x.is_integer())
    }

    pub fn objective_f64(&self) -> f64 {
        self.objective.to_f64().unwrap_or(f64::NAN)
    }
}

/// Exact solve in rational arithmetic.
pub fn solve_lp(lp: &FairnessLp) -> Result<FractionalSolution> {
    match lp::solve(&lp.program) {
        LpOutcome::Optimal { x, .. } => {
            let objective = FractionalSolution::objective_of(&x, &lp.graph);
            Ok(FractionalSolution { z: x, objective })
        }
        LpOutcome::Infeasible => Err(Error::LpInfeasible),
        LpOutcome::Unbounded => Err(Error::Internal("fairness LP reported unbounded".into())),
    }
}

/// Floating-point solve. Returns the edge masses and the objective in value
/// units; useful for large sweeps where only the objective matters.
pub fn solve_lp_f64(lp: &FairnessLp) -> Result<(Vec<f64>, f64)> {
    let program = lp.program.map(|x| x.to_f64().unwrap_or(f64::NAN));
    match lp::solve(&program) {
        LpOutcome::Optimal { x, objective } => Ok((x, objective / SCALE as f64)),
        LpOutcome::Infeasible => Err(Error::LpInfeasible),
        LpOutcome::Unbounded => Err(Error::Internal("fairness LP reported unbounded".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub buyers: Vec<AgentId>,
    pub r: u32,
    pub singleton: bool,
    /// Units the LP solution sends to the group.
    pub lp_total: f64,
    /// Units the rounded assignment sends to the group.
    pub assigned: usize,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairReport {
    pub groups: Vec<GroupReport>,
    pub lp_objective: f64,
    pub welfare: f64,
    /// Set when the post-rounding prefix repair changed the assignment.
    pub repair_changed: bool,
    /// Set when the repair moved any group total (never expected).
    pub repair_changed_group_totals: bool,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct FairSolution {
    pub rounded: RoundedSolution,
    /// The rounded assignment after prefix repair.
    pub assignment: TradingAssignment,
    pub welfare: Value,
    pub lp: FractionalSolution,
    pub report: FairReport,
}

const LP_NOTE: &str = "singleton groups hold on every run; larger groups hold in expectation. \
LP feasibility does not imply that an integral assignment meets every bound";

/// Build, solve, normalize and round. Randomness comes only from `rng`.
pub fn solve_fair<R: Rng + ?Sized>(instance: &MarketInstance, spec: &FairnessSpec, rng: &mut R) -> Result<FairSolution> {
    let violations = instance.monotonicity_violations();
    if !violations.is_empty() {
        return Err(Error::NonMonotone(violations.join("; ")));
    }
    let lp = build_fairness_lp(instance, spec)?;
    let fractional = solve_lp(&lp)?;
    let normalized = normalize_prefix_fractional(&fractional, &lp.graph, instance);
    let rounded = dependent_round(&normalized, &lp.graph, rng);
    let assignment = repair_prefix(&rounded.assignment, instance);
    let welfare = welfare(&assignment, instance)?;

    let before = rounded.assignment.buyer_counts(instance);
    let after = assignment.buyer_counts(instance);
    let lp_buyer_mass = buyer_mass(&normalized, &lp.graph, instance.buyers().len());
    let groups = spec
        .groups
        .iter()
        .zip(&lp.groups)
        .map(|(g, rg)| {
            let assigned = rg.total(&after);
            GroupReport {
                buyers: g.buyers.clone(),
                r: g.r,
                singleton: rg.is_singleton(),
                lp_total: rg.buyers.iter().map(|&b| lp_buyer_mass[b]).sum(),
                assigned,
                satisfied: assigned >= rg.r as usize,
            }
        })
        .collect();
    let report = FairReport {
        groups,
        lp_objective: normalized.objective_f64(),
        welfare: welfare.to_f64(),
        repair_changed: assignment != rounded.assignment,
        repair_changed_group_totals: lp.groups.iter().any(|g| g.total(&before) != g.total(&after)),
        note: LP_NOTE.to_string(),
    };
    Ok(FairSolution { rounded, assignment, welfare, lp: normalized, report })
}

fn buyer_mass(z: &FractionalSolution, graph: &ResourcesNeedsGraph, buyers: usize) -> Vec<f64> {
    let mut mass = vec![BigRational::zero(); buyers];
    for (x, e) in z.z.iter().zip(graph.edges()) {
        mass[e.buyer.agent] += x;
    }
    mass.iter().map(|m| m.to_f64().unwrap_or(f64::NAN)).collect()
}

/// Exhaustive check for a valid assignment meeting every group bound.
pub fn feas_demog_bruteforce(instance: &MarketInstance, spec: &FairnessSpec, options: BruteForceOptions) -> Result<bool> {
    let groups = spec.resolve(instance, DEFAULT_GROUP_CAP)?;
    brute_force_exists(instance, options, |counts| groups.iter().all(|g| g.total(counts) >= g.r as usize))
}
