use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use super::FractionalSolution;
use crate::model::{ResourcesNeedsGraph, TradingAssignment};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundedSolution {
    /// One flag per resources–needs edge.
    pub indicator: Vec<bool>,
    pub assignment: TradingAssignment,
}

/// Dependent rounding on the support of `z`.
///
/// While fractional edges remain, pick a cycle among them (lowest node
/// first) or, if they form a forest, a maximal path starting at the
/// lowest-numbered leaf. Alternate its edges into two classes and shift mass
/// between them by the largest amounts that keep every value in [0, 1],
/// choosing the direction with the probability that leaves each edge's
/// expectation unchanged. Each step makes at least one edge integral. Inner
/// nodes of the cycle or path keep their degree; path ends touch no other
/// fractional edge, so their degree stays between floor and ceiling.
pub fn dependent_round<R: Rng + ?Sized>(z: &FractionalSolution, graph: &ResourcesNeedsGraph, rng: &mut R) -> RoundedSolution {
    let mut x = z.z.clone();
    let left = graph.seller_nodes().len();
    let nodes = left + graph.buyer_nodes().len();
    let ends: Vec<(usize, usize)> = (0..x.len())
        .map(|e| {
            let (l, r) = graph.endpoints(e);
            (l, left + r)
        })
        .collect();

    loop {
        let frac: Vec<usize> = (0..x.len()).filter(|&e| is_fractional(&x[e])).collect();
        if frac.is_empty() {
            break;
        }
        let mut adj = vec![Vec::new(); nodes];
        for &e in &frac {
            adj[ends[e].0].push(e);
            adj[ends[e].1].push(e);
        }
        let walk = find_cycle(&adj, &ends).unwrap_or_else(|| find_path(&adj, &ends));
        step(&mut x, &walk, rng);
    }

    let indicator: Vec<bool> = x.iter().map(|v| v.is_one()).collect();
    let assignment = graph.assignment_from_edges((0..indicator.len()).filter(|&e| indicator[e]));
    RoundedSolution { indicator, assignment }
}

fn is_fractional(v: &BigRational) -> bool {
    v.is_positive() && *v < BigRational::one()
}

fn other(ends: &[(usize, usize)], e: usize, v: usize) -> usize {
    if ends[e].0 == v {
        ends[e].1
    } else {
        ends[e].0
    }
}

/// Edges of a cycle in the 2-core of the fractional graph, if any.
fn find_cycle(adj: &[Vec<usize>], ends: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut alive = vec![true; adj.len()];
    let mut stack: Vec<usize> = (0..adj.len()).filter(|&v| degree[v] <= 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &e in &adj[v] {
            let u = other(ends, e, v);
            if alive[u] {
                degree[u] -= 1;
                if degree[u] == 1 {
                    stack.push(u);
                }
            }
        }
    }
    let start = (0..adj.len()).find(|&v| alive[v])?;

    // every live node has two live edges, so the walk only stops on a repeat
    let mut seen = vec![usize::MAX; adj.len()];
    let mut edges = Vec::new();
    let (mut v, mut prev) = (start, usize::MAX);
    loop {
        seen[v] = edges.len();
        let e = *adj[v]
            .iter()
            .find(|&&e| e != prev && alive[other(ends, e, v)])
            .expect("2-core node has a second edge");
        edges.push(e);
        let u = other(ends, e, v);
        if seen[u] != usize::MAX {
            return Some(edges.split_off(seen[u]));
        }
        prev = e;
        v = u;
    }
}

/// A maximal path in a fractional forest, from its lowest leaf.
fn find_path(adj: &[Vec<usize>], ends: &[(usize, usize)]) -> Vec<usize> {
    let start = (0..adj.len()).find(|&v| adj[v].len() == 1).expect("a non-empty forest has a leaf");
    let mut edges = Vec::new();
    let (mut v, mut prev) = (start, usize::MAX);
    while let Some(&e) = adj[v].iter().find(|&&e| e != prev) {
        edges.push(e);
        prev = e;
        v = other(ends, e, v);
    }
    edges
}

fn step<R: Rng + ?Sized>(x: &mut [BigRational], walk: &[usize], rng: &mut R) {
    let one = BigRational::one();
    let mut alpha: Option<BigRational> = None;
    let mut beta: Option<BigRational> = None;
    let take_min = |slot: &mut Option<BigRational>, v: BigRational| {
        if slot.as_ref().is_none_or(|cur| v < *cur) {
            *slot = Some(v);
        }
    };
    for (k, &e) in walk.iter().enumerate() {
        let (up, down) = (&one - &x[e], x[e].clone());
        if k % 2 == 0 {
            take_min(&mut alpha, up);
            take_min(&mut beta, down);
        } else {
            take_min(&mut alpha, down);
            take_min(&mut beta, up);
        }
    }
    let (alpha, beta) = (alpha.unwrap_or_else(BigRational::zero), beta.unwrap_or_else(BigRational::zero));
    let p = (&beta / (&alpha + &beta)).to_f64().unwrap_or(0.5);
    let shift = if rng.random::<f64>() < p { alpha } else { -beta };
    for (k, &e) in walk.iter().enumerate() {
        if k % 2 == 0 {
            x[e] += &shift;
        } else {
            x[e] -= &shift;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::tests::q;
    use crate::model::tests::agent;
    use crate::model::{build_resources_needs_graph, MarketInstance, UnitRef};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn solution(z: Vec<BigRational>, g: &ResourcesNeedsGraph) -> FractionalSolution {
        FractionalSolution { objective: FractionalSolution::objective_of(&z, g), z }
    }

    /// Per node (sellers then buyers) fractional degree.
    fn degrees(z: &[BigRational], g: &ResourcesNeedsGraph) -> Vec<BigRational> {
        let left = g.seller_nodes().len();
        let mut d = vec![BigRational::zero(); left + g.buyer_nodes().len()];
        for (e, v) in z.iter().enumerate() {
            let (l, r) = g.endpoints(e);
            d[l] += v;
            d[left + r] += v;
        }
        d
    }

    fn assert_degrees(z: &[BigRational], rounded: &RoundedSolution, g: &ResourcesNeedsGraph) {
        let ints: Vec<BigRational> =
            rounded.indicator.iter().map(|&b| if b { BigRational::one() } else { BigRational::zero() }).collect();
        for (f, r) in degrees(z, g).iter().zip(degrees(&ints, g)) {
            assert!(f.floor() <= r && r <= f.ceil(), "fractional {f}, rounded {r}");
        }
    }

    /// 2 sellers × 2 buyers, one unit each, complete: a 4-cycle.
    fn square() -> (MarketInstance, ResourcesNeedsGraph) {
        let inst = MarketInstance::complete(vec![agent("s1", &[1]), agent("s2", &[1])], vec![agent("b1", &[3]), agent("b2", &[2])])
            .unwrap();
        let g = build_resources_needs_graph(&inst);
        (inst, g)
    }

    #[test]
    fn integral_input_is_returned_unchanged() {
        let (_, g) = square();
        let z = solution(vec![q(1, 1), q(0, 1), q(0, 1), q(1, 1)], &g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = dependent_round(&z, &g, &mut rng);
        assert_eq!(r.indicator, vec![true, false, false, true]);
        assert_eq!(r.assignment.len(), 2);
    }

    #[test]
    fn half_cycle_yields_both_perfect_matchings() {
        let (_, g) = square();
        let z = solution(vec![q(1, 2); 4], &g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4000;
        let mut first = 0;
        for _ in 0..n {
            let r = dependent_round(&z, &g, &mut rng);
            assert_degrees(&z.z, &r, &g);
            match r.indicator.as_slice() {
                [true, false, false, true] => first += 1,
                [false, true, true, false] => {}
                other => panic!("not a perfect matching: {other:?}"),
            }
        }
        let p = first as f64 / n as f64;
        assert!((p - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn path_sharing_a_node_keeps_its_unit_degree() {
        // one seller unit, two buyers: z = (0.3, 0.7) meets at the seller
        let inst = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b1", &[3]), agent("b2", &[2])]).unwrap();
        let g = build_resources_needs_graph(&inst);
        let z = solution(vec![q(3, 10), q(7, 10)], &g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let r = dependent_round(&z, &g, &mut rng);
            assert_eq!(r.indicator.iter().filter(|&&b| b).count(), 1);
            assert_eq!(r.assignment.matched_seller_units().len(), 1);
        }
    }

    /// 2 sellers (2 units each) × 2 buyers (2 units each): a richer support
    /// with cycles and paths.
    fn dense_case() -> (MarketInstance, ResourcesNeedsGraph, FractionalSolution) {
        let inst = MarketInstance::complete(
            vec![agent("s1", &[1, 2]), agent("s2", &[1, 1])],
            vec![agent("b1", &[6, 4]), agent("b2", &[5, 2])],
        )
        .unwrap();
        let g = build_resources_needs_graph(&inst);
        let mut z = vec![BigRational::zero(); g.edges().len()];
        let mut set = |s, i, b, j, v| z[g.edge_between(UnitRef::new(s, i), UnitRef::new(b, j)).unwrap()] = v;
        set(0, 0, 0, 0, q(1, 3));
        set(0, 0, 1, 0, q(2, 3));
        set(1, 0, 0, 0, q(2, 3));
        set(1, 0, 1, 0, q(1, 3));
        set(0, 1, 0, 1, q(1, 4));
        set(1, 1, 0, 1, q(1, 2));
        set(1, 1, 1, 1, q(1, 5));
        let z = solution(z, &g);
        (inst, g, z)
    }

    #[test]
    fn marginals_welfare_and_group_totals() {
        let (inst, g, z) = dense_case();
        let n = 20_000;
        let mut hits = vec![0usize; z.z.len()];
        let mut welfare_sum = 0.0;
        let mut group_sum = 0.0;
        let mut group_sq = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..n {
            let r = dependent_round(&z, &g, &mut rng);
            assert_degrees(&z.z, &r, &g);
            for (h, &b) in hits.iter_mut().zip(&r.indicator) {
                *h += b as usize;
            }
            welfare_sum += crate::model::welfare(&r.assignment, &inst).unwrap().to_f64();
            let t = r.assignment.buyer_counts(&inst)[1] as f64;
            group_sum += t;
            group_sq += t * t;
        }
        for (e, &h) in hits.iter().enumerate() {
            let p = z.z[e].to_f64().unwrap();
            let emp = h as f64 / n as f64;
            assert!((emp - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "edge {e}: {emp} vs {p}");
        }
        let mean = welfare_sum / n as f64;
        let lp = z.objective_f64();
        assert!((mean - lp).abs() <= 0.02 * lp, "{mean} vs {lp}");

        // group {b2} has LP mass 2/3 + 1/3 + 1/5 = 6/5; treat r = 1
        let gm = group_sum / n as f64;
        let se = ((group_sq / n as f64 - gm * gm) / n as f64).sqrt();
        assert!(gm >= 1.0 - 3.0 * se);
        assert!((gm - 1.2).abs() <= 3.0 * se + 1e-9);
    }

    #[test]
    fn same_seed_same_result() {
        let (_, g, z) = dense_case();
        let a = dependent_round(&z, &g, &mut ChaCha8Rng::seed_from_u64(9));
        let b = dependent_round(&z, &g, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
