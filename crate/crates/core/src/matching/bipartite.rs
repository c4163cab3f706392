use std::collections::HashSet;

use super::flow::Residual;
use super::Cost;
use crate::error::{Error, Result};

/// Bipartite graph with non-negative edge weights. Left nodes are
/// `0..left`, right nodes `0..right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedBipartiteGraph<W> {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize, W)>,
}

impl<W: Cost> WeightedBipartiteGraph<W> {
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize, W)>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for (i, (l, r, w)) in edges.iter().enumerate() {
            if *l >= left || *r >= right {
                problems.push(format!("edge {i} ({l}, {r}) is out of range"));
            }
            if !seen.insert((*l, *r)) {
                problems.push(format!("duplicate edge ({l}, {r})"));
            }
            if w.is_negative() {
                problems.push(format!("edge ({l}, {r}) has negative weight"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(WeightedBipartiteGraph { left, right, edges })
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn edges(&self) -> &[(usize, usize, W)] {
        &self.edges
    }

    pub fn weight_of(&self, edges: &[usize]) -> W {
        edges.iter().fold(W::zero(), |acc, &e| acc + self.edges[e].2.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching<W> {
    /// Indices into the graph's edge list, ascending.
    pub edges: Vec<usize>,
    pub weight: W,
}

/// Maximum-weight (not necessarily maximum-cardinality) matching.
///
/// Successive shortest paths on the unit-capacity network
/// source → left → right → sink with arc costs `-weight`; augmentation stops
/// at the first path whose cost is not negative, so zero-gain edges are
/// left out. Path costs are non-decreasing across augmentations, which makes
/// the stopping point optimal. Output is deterministic for a fixed edge order.
pub fn max_weight_matching<W: Cost>(g: &WeightedBipartiteGraph<W>) -> Matching<W> {
    let (left, right) = (g.left, g.right);
    let (source, sink) = (left + right, left + right + 1);
    let mut res = Residual::new(left + right + 2);
    for l in 0..left {
        res.add_edge(source, l, 1, W::zero());
    }
    let edge_ids: Vec<usize> = g
        .edges
        .iter()
        .map(|(l, r, w)| res.add_edge(*l, left + *r, 1, -w.clone()))
        .collect();
    for r in 0..right {
        res.add_edge(left + r, sink, 1, W::zero());
    }
    res.init_potentials().expect("matching network is acyclic");
    while let Some((path, cost)) = res.shortest_path(source, sink) {
        if !cost.is_negative() {
            break;
        }
        res.augment(&path, 1);
    }
    let edges: Vec<usize> =
        edge_ids.iter().enumerate().filter(|(_, &id)| res.residual_cap(id) == 0).map(|(i, _)| i).collect();
    let weight = g.weight_of(&edges);
    Matching { edges, weight }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive maximum over all matchings: each edge in or out.
    fn brute_force_best(g: &WeightedBipartiteGraph<i64>) -> i64 {
        fn go(g: &WeightedBipartiteGraph<i64>, i: usize, used_l: &mut Vec<bool>, used_r: &mut Vec<bool>) -> i64 {
            if i == g.edges.len() {
                return 0;
            }
            let skip = go(g, i + 1, used_l, used_r);
            let (l, r, w) = g.edges[i];
            if used_l[l] || used_r[r] {
                return skip;
            }
            used_l[l] = true;
            used_r[r] = true;
            let take = w + go(g, i + 1, used_l, used_r);
            used_l[l] = false;
            used_r[r] = false;
            skip.max(take)
        }
        go(g, 0, &mut vec![false; g.left], &mut vec![false; g.right])
    }

    fn is_matching(g: &WeightedBipartiteGraph<i64>, edges: &[usize]) -> bool {
        let mut l = HashSet::new();
        let mut r = HashSet::new();
        edges.iter().all(|&e| l.insert(g.edges[e].0) && r.insert(g.edges[e].1))
    }

    #[test]
    fn empty_graph() {
        let g = WeightedBipartiteGraph::<i64>::new(3, 2, vec![]).unwrap();
        let m = max_weight_matching(&g);
        assert!(m.edges.is_empty());
        assert_eq!(m.weight, 0);
    }

    #[test]
    fn single_edge() {
        let g = WeightedBipartiteGraph::new(1, 1, vec![(0, 0, 5i64)]).unwrap();
        assert_eq!(max_weight_matching(&g), Matching { edges: vec![0], weight: 5 });
    }

    #[test]
    fn two_by_two_example() {
        let g = WeightedBipartiteGraph::new(2, 2, vec![(0, 0, 2i64), (0, 1, 1), (1, 0, 1), (1, 1, 0)]).unwrap();
        let m = max_weight_matching(&g);
        assert_eq!(m.weight, 2);
        assert_eq!(brute_force_best(&g), 2);
        assert!(is_matching(&g, &m.edges));
    }

    #[test]
    fn prefers_weight_over_cardinality() {
        // a single heavy edge beats two light ones
        let g = WeightedBipartiteGraph::new(2, 2, vec![(0, 0, 10i64), (0, 1, 4), (1, 0, 4)]).unwrap();
        assert_eq!(max_weight_matching(&g).edges, vec![0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(WeightedBipartiteGraph::new(1, 1, vec![(0, 0, -1i64)]).is_err());
        assert!(WeightedBipartiteGraph::new(1, 1, vec![(0, 0, 1i64), (0, 0, 2)]).is_err());
        assert!(WeightedBipartiteGraph::new(1, 1, vec![(1, 0, 1i64)]).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = WeightedBipartiteGraph<i64>> {
        (1usize..=5, 1usize..=5)
            .prop_filter("at most 10 nodes", |(l, r)| l + r <= 10)
            .prop_flat_map(|(l, r)| {
                prop::collection::btree_map((0..l, 0..r), 0i64..20, 0..=(l * r).min(12))
                    .prop_map(move |m| {
                        WeightedBipartiteGraph::new(l, r, m.into_iter().map(|((a, b), w)| (a, b, w)).collect())
                            .unwrap()
                    })
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn matches_exhaustive_optimum(g in arb_graph()) {
            let m = max_weight_matching(&g);
            prop_assert!(is_matching(&g, &m.edges));
            prop_assert_eq!(m.weight, g.weight_of(&m.edges));
            prop_assert_eq!(m.weight, brute_force_best(&g));
            prop_assert_eq!(max_weight_matching(&g), m);
        }
    }
}
