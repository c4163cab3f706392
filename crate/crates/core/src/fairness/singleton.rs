use crate::error::{Error, Result};
use crate::matching::{min_cost_flow_with_lower_bounds, FlowError, FlowNetwork};
use crate::model::{build_resources_needs_graph, MarketInstance, TradingAssignment};
use crate::welfare::repair_prefix;

use super::{FairnessSpec, DEFAULT_GROUP_CAP};

/// Per-buyer lower bounds when every group names exactly one buyer, `None`
/// otherwise. Repeated groups for a buyer keep the largest bound.
pub fn singleton_bounds(instance: &MarketInstance, spec: &FairnessSpec) -> Result<Option<Vec<u32>>> {
    let groups = spec.resolve(instance, DEFAULT_GROUP_CAP)?;
    let mut bounds = vec![0u32; instance.buyers().len()];
    for g in &groups {
        if !g.is_singleton() {
            return Ok(None);
        }
        let b = *g.buyers.first().expect("singleton");
        bounds[b] = bounds[b].max(g.r);
    }
    Ok(Some(bounds))
}

/// Exact maximum welfare subject to each buyer receiving at least
/// `lower[b]` units.
///
/// Flow network: source → seller unit → buyer unit (cost −α) → buyer →
/// sink, with the buyer → sink arc bounded below by `lower[b]`. The
/// min-cost flow value is scanned upward; cost is convex in the flow value,
/// so the scan stops once it starts rising. A prefix repair finishes.
pub fn solve_fair_singleton(instance: &MarketInstance, lower: &[u32]) -> Result<TradingAssignment> {
    if lower.len() != instance.buyers().len() {
        return Err(Error::LengthMismatch { left: lower.len(), right: instance.buyers().len() });
    }
    let violations = instance.monotonicity_violations();
    if !violations.is_empty() {
        return Err(Error::NonMonotone(violations.join("; ")));
    }
    let graph = build_resources_needs_graph(instance);
    let (ls, lb, nb) = (graph.seller_nodes().len(), graph.buyer_nodes().len(), instance.buyers().len());
    let source = ls + lb + nb;
    let sink = source + 1;
    let mut net = FlowNetwork::<i128>::new(sink + 1, source, sink);
    for l in 0..ls {
        net.add_arc(source, l, 0, 1, 0);
    }
    let first_edge_arc = net.arcs().len();
    for (e, edge) in graph.edges().iter().enumerate() {
        let (l, r) = graph.endpoints(e);
        net.add_arc(l, ls + r, 0, 1, -i128::from(edge.weight.micros()));
    }
    for (r, unit) in graph.buyer_nodes().iter().enumerate() {
        net.add_arc(ls + r, ls + lb + unit.agent, 0, 1, 0);
    }
    for (b, buyer) in instance.buyers().iter().enumerate() {
        net.add_arc(ls + lb + b, sink, i64::from(lower[b]), buyer.unit_count() as i64, 0);
    }

    let lo: i64 = lower.iter().map(|&r| i64::from(r)).sum();
    let hi = ls.min(lb).min(graph.edges().len()) as i64;
    let mut best: Option<(i128, Vec<i64>)> = None;
    for value in lo..=hi {
        match min_cost_flow_with_lower_bounds(&net, value) {
            Ok(sol) => {
                if let Some((c, _)) = &best {
                    if sol.cost > *c {
                        break;
                    }
                }
                if best.as_ref().is_none_or(|(c, _)| sol.cost < *c) {
                    best = Some((sol.cost, sol.flows));
                }
            }
            Err(FlowError::Infeasible) if best.is_some() => break,
            Err(FlowError::Infeasible) => {}
            Err(FlowError::Malformed(m)) => return Err(Error::Internal(m)),
        }
    }
    let (_, flows) = best.ok_or_else(|| Error::Infeasible("no assignment meets every per-buyer lower bound".into()))?;
    let raw = graph.assignment_from_edges((0..graph.edges().len()).filter(|&e| flows[first_edge_arc + e] == 1));
    Ok(repair_prefix(&raw, instance))
}
