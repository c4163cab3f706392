use super::flow::{min_cost_flow_with_lower_bounds, FlowError, FlowNetwork};
use super::WeightedBipartiteGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegreeBounds {
    pub lower: u32,
    pub upper: u32,
}

impl DegreeBounds {
    pub const fn new(lower: u32, upper: u32) -> Self {
        DegreeBounds { lower, upper }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DcsSolution {
    pub edges: Vec<usize>,
    pub weight: i64,
}

/// Maximum-weight degree-constrained subgraph of a bipartite graph.
///
/// Every node must end with degree in its `[lower, upper]` interval. Solved as
/// source → left → right → sink flow with the node intervals as arc bounds,
/// scanning every admissible total edge count.
pub fn dcs_solve(
    g: &WeightedBipartiteGraph<i64>,
    left_bounds: &[DegreeBounds],
    right_bounds: &[DegreeBounds],
) -> Result<DcsSolution, FlowError> {
    if left_bounds.len() != g.left() || right_bounds.len() != g.right() {
        return Err(FlowError::Malformed("one degree interval per node is required".into()));
    }
    if left_bounds.iter().chain(right_bounds).any(|b| b.lower > b.upper) {
        return Err(FlowError::Malformed("degree interval with lower > upper".into()));
    }
    let (left, right) = (g.left(), g.right());
    let (source, sink) = (left + right, left + right + 1);
    let mut net = FlowNetwork::new(left + right + 2, source, sink);
    for (l, b) in left_bounds.iter().enumerate() {
        net.add_arc(source, l, b.lower.into(), b.upper.into(), 0i64);
    }
    let first_edge_arc = net.arcs().len();
    for &(l, r, w) in g.edges() {
        net.add_arc(l, left + r, 0, 1, -w);
    }
    for (r, b) in right_bounds.iter().enumerate() {
        net.add_arc(left + r, sink, b.lower.into(), b.upper.into(), 0);
    }

    let sum = |bs: &[DegreeBounds], f: fn(&DegreeBounds) -> u32| bs.iter().map(|b| i64::from(f(b))).sum::<i64>();
    let lo = sum(left_bounds, |b| b.lower).max(sum(right_bounds, |b| b.lower));
    let hi = sum(left_bounds, |b| b.upper).min(sum(right_bounds, |b| b.upper)).min(g.edges().len() as i64);

    let mut best: Option<(i64, Vec<i64>)> = None;
    for value in lo..=hi {
        match min_cost_flow_with_lower_bounds(&net, value) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|(c, _)| sol.cost < *c) {
                    best = Some((sol.cost, sol.flows));
                }
            }
            Err(FlowError::Infeasible) => {}
            Err(e) => return Err(e),
        }
    }
    let (cost, flows) = best.ok_or(FlowError::Infeasible)?;
    let edges = (0..g.edges().len()).filter(|&e| flows[first_edge_arc + e] == 1).collect();
    Ok(DcsSolution { edges, weight: -cost })
}
