use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::FractionalSolution;
use crate::model::{MarketInstance, ResourcesNeedsGraph, UnitRef};

/// Pushes fractional mass onto each agent's earliest units.
///
/// For every buyer, unit `i` is topped up to mass 1 from its later units
/// (lowest index first) before unit `i + 1` keeps any mass; mass on edge
/// `(s_u, b_t)` moves to `(s_u, b_i)`. Sellers get the same treatment. Node
/// sums on the other side and per-agent totals are unchanged, and under
/// monotone values every move lands on an existing edge of no smaller
/// weight. On integral input this is exactly
/// [`repair_prefix`](crate::welfare::repair_prefix).
///
/// Moves whose target edge is missing (possible only on non-monotone
/// instances) are skipped.
pub fn normalize_prefix_fractional(
    z: &FractionalSolution,
    graph: &ResourcesNeedsGraph,
    instance: &MarketInstance,
) -> FractionalSolution {
    let mut x = z.z.clone();
    let mut by_seller = vec![Vec::new(); graph.seller_nodes().len()];
    let mut by_buyer = vec![Vec::new(); graph.buyer_nodes().len()];
    for e in 0..graph.edges().len() {
        let (l, r) = graph.endpoints(e);
        by_seller[l].push(e);
        by_buyer[r].push(e);
    }

    for (b, buyer) in instance.buyers().iter().enumerate() {
        let node = |u| graph.buyer_node(UnitRef::new(b, u));
        fill(&mut x, buyer.unit_count(), |u| &by_buyer[node(u)], |e, target| {
            graph.edge_between(graph.edges()[e].seller, UnitRef::new(b, target))
        });
    }
    for (s, seller) in instance.sellers().iter().enumerate() {
        let node = |u| graph.seller_node(UnitRef::new(s, u));
        fill(&mut x, seller.unit_count(), |u| &by_seller[node(u)], |e, target| {
            graph.edge_between(UnitRef::new(s, target), graph.edges()[e].buyer)
        });
    }

    let objective = FractionalSolution::objective_of(&x, graph);
    FractionalSolution { z: x, objective }
}

/// Water-fills one agent's units. `incident(u)` lists the edges at unit `u`;
/// `moved(e, i)` is the edge that takes over `e`'s mass when it moves to
/// unit `i`.
fn fill<'a>(
    x: &mut [BigRational],
    units: usize,
    incident: impl Fn(usize) -> &'a Vec<usize>,
    moved: impl Fn(usize, usize) -> Option<usize>,
) {
    for i in 0..units {
        let mass: BigRational = incident(i).iter().map(|&e| &x[e]).sum();
        let mut need = BigRational::one() - mass;
        for t in i + 1..units {
            if !need.is_positive() {
                break;
            }
            for &e in incident(t) {
                if !need.is_positive() {
                    break;
                }
                if x[e].is_zero() {
                    continue;
                }
                let Some(target) = moved(e, i) else { continue };
                let m = if x[e] < need { x[e].clone() } else { need.clone() };
                x[e] -= &m;
                x[target] += &m;
                need -= m;
            }
        }
    }
}
