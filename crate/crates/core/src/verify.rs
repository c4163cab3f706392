//! Self-check suites: solvers against exhaustive oracles, rounding
//! statistics, gadget equivalences and leximin tables.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fairness::{dependent_round, solve_fair_singleton, FairnessSpec, FractionalSolution, Group};
use crate::leximin::{brute_force_leximin, build_ratio_ranks, leximin_compare, solve_leximin, LeximinBuyer, LeximinCaps, LeximinInstance};
use crate::matching::max_weight_matching;
use crate::model::{build_resources_needs_graph, validate_assignment, welfare, Agent, MarketInstance, ResourcesNeedsGraph, UnitRef};
use crate::reductions::{random_vc, random_x3c, verify_reduction_vc, verify_reduction_x3c};
use crate::value::Value;
use crate::welfare::{brute_force_max_welfare, brute_force_max_welfare_where, repair_prefix, solve_max_welfare, BruteForceOptions, SolveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Oracles,
    Rounding,
    Reductions,
    Leximin,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Oracles, Suite::Rounding, Suite::Reductions, Suite::Leximin];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracles" => Ok(Suite::Oracles),
            "rounding" => Ok(Suite::Rounding),
            "reductions" => Ok(Suite::Reductions),
            "leximin" => Ok(Suite::Leximin),
            _ => Err(Error::Parse(format!("unknown suite {s:?}; expected oracles, rounding, reductions or leximin"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Oracles => "oracles",
            Suite::Rounding => "rounding",
            Suite::Reductions => "reductions",
            Suite::Leximin => "leximin",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: Vec<String>, total: usize) -> Self {
        let detail = match failures.first() {
            None => format!("{total}/{total} ok"),
            Some(first) => format!("{} of {total} failed; first: {first}", failures.len()),
        };
        CheckOutcome { name, passed: failures.is_empty(), detail }
    }
}

/// Random monotone instance with integer values in `0..8` and random
/// agent-level compatibility, at most `max_total` units in all.
pub fn random_monotone_instance<R: Rng + ?Sized>(rng: &mut R, max_agents: usize, max_total: usize) -> MarketInstance {
    loop {
        let ns = rng.random_range(1..=max_agents);
        let nb = rng.random_range(1..=max_agents);
        let mut side = |n: usize, prefix: &str, descending: bool| -> Vec<Agent> {
            (0..n)
                .map(|i| {
                    let len = rng.random_range(1..=3);
                    let mut v: Vec<i64> = (0..len).map(|_| rng.random_range(0..8)).collect();
                    v.sort_unstable();
                    if descending {
                        v.reverse();
                    }
                    Agent::new(format!("{prefix}{}", i + 1), 0, v.into_iter().map(Value::from_int).collect())
                })
                .collect()
        };
        let sellers = side(ns, "s", false);
        let buyers = side(nb, "b", true);
        let total: usize = sellers.iter().chain(&buyers).map(Agent::unit_count).sum();
        if total > max_total {
            continue;
        }
        let compat: Vec<(usize, usize)> =
            (0..ns).flat_map(|s| (0..nb).map(move |b| (s, b))).filter(|_| rng.random_bool(0.6)).collect();
        return MarketInstance::from_indices(sellers, buyers, compat).expect("generated instance is valid");
    }
}

/// Random single-seller instance with `k ≤ max_k`, up to `max_buyers`
/// buyers, demands `1..=k` and compatibility probability 1/2.
pub fn random_leximin_instance<R: Rng + ?Sized>(rng: &mut R, max_k: usize, max_buyers: usize) -> LeximinInstance {
    let k = rng.random_range(1..=max_k);
    let nb = rng.random_range(1..=max_buyers);
    let buyers: Vec<LeximinBuyer> =
        (0..nb).map(|b| LeximinBuyer { id: format!("b{}", b + 1).into(), gamma: rng.random_range(1..=k as u32) }).collect();
    let edges: Vec<(usize, usize)> = (0..k).flat_map(|u| (0..nb).map(move |b| (u, b))).filter(|_| rng.random_bool(0.5)).collect();
    LeximinInstance::new(k, buyers, edges).expect("generated instance is valid")
}

/// Three single-unit sellers, two single-unit buyers, complete: six
/// edges carrying a fixed fractional matching. Buyer `b1` is saturated, so
/// the group `({b1}, 1)` must hold after any degree-preserving rounding.
pub fn rounding_fixture() -> (MarketInstance, ResourcesNeedsGraph, FractionalSolution, FairnessSpec) {
    let v = |x: i64| vec![Value::from_int(x)];
    let inst = MarketInstance::complete(
        vec![Agent::new("s1", 0, v(1)), Agent::new("s2", 0, v(2)), Agent::new("s3", 0, v(1))],
        vec![Agent::new("b1", 0, v(5)), Agent::new("b2", 0, v(3))],
    )
    .expect("fixture is valid");
    let graph = build_resources_needs_graph(&inst);
    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let mut z = vec![BigRational::zero(); graph.edges().len()];
    for (s, b, x) in [(0, 0, q(3, 10)), (0, 1, q(1, 5)), (1, 0, q(3, 10)), (1, 1, q(2, 5)), (2, 0, q(2, 5)), (2, 1, q(1, 10))] {
        let e = graph.edge_between(UnitRef::new(s, 0), UnitRef::new(b, 0)).expect("complete fixture");
        z[e] = x;
    }
    let objective = FractionalSolution::objective_of(&z, &graph);
    let spec = FairnessSpec::new(vec![Group { buyers: vec!["b1".into()], r: 1 }]);
    (inst, graph, FractionalSolution { z, objective }, spec)
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Oracles => oracles(&mut rng),
        Suite::Rounding => rounding(&mut rng),
        Suite::Reductions => reductions(&mut rng),
        Suite::Leximin => leximin(&mut rng),
    }
}

fn oracles(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let corpus: Vec<MarketInstance> = (0..200).map(|_| random_monotone_instance(rng, 3, 8)).collect();
    let opts = BruteForceOptions::with_cap(8);
    let mut welfare_fail = Vec::new();
    let mut repair_fail = Vec::new();
    for (i, inst) in corpus.iter().enumerate() {
        let got = solve_max_welfare(inst, SolveOptions::default())?.welfare;
        let want = welfare(&brute_force_max_welfare(inst, opts)?, inst)?;
        if got != want {
            welfare_fail.push(format!("instance {i}: solver {got}, oracle {want}"));
        }
        let graph = build_resources_needs_graph(inst);
        let m = max_weight_matching(&graph.to_bipartite());
        let repaired = repair_prefix(&graph.assignment_from_edges(m.edges.iter().copied()), inst);
        let w = welfare(&repaired, inst)?;
        let violations = validate_assignment(&repaired, inst);
        if w != Value::from_micros(m.weight) || !violations.is_empty() {
            repair_fail.push(format!("instance {i}: matching {}, repaired {w}, {} violations", Value::from_micros(m.weight), violations.len()));
        }
    }
    let mut singleton_fail = Vec::new();
    for i in 0..100 {
        let inst = random_monotone_instance(rng, 3, 8);
        let lower: Vec<u32> = inst.buyers().iter().map(|_| rng.random_range(0..=2)).collect();
        let best = brute_force_max_welfare_where(&inst, opts, |c| c.iter().zip(&lower).all(|(&n, &r)| n >= r as usize))?;
        let ok = match (solve_fair_singleton(&inst, &lower), best) {
            (Ok(a), Some(b)) => validate_assignment(&a, &inst).is_empty() && welfare(&a, &inst)? == welfare(&b, &inst)?,
            (Err(e), None) => e.is_infeasible(),
            (Err(e), Some(_)) => {
                singleton_fail.push(format!("instance {i}: solver error {e}, oracle feasible"));
                continue;
            }
            (Ok(_), None) => false,
        };
        if !ok {
            singleton_fail.push(format!("instance {i}: solver and oracle disagree"));
        }
    }
    Ok(vec![
        CheckOutcome::new("max welfare equals brute force", welfare_fail, corpus.len()),
        CheckOutcome::new("prefix repair keeps welfare and validity", repair_fail, corpus.len()),
        CheckOutcome::new("singleton bounds equal brute force", singleton_fail, 100),
    ])
}

/// Statistics of repeated rounding of [`rounding_fixture`].
pub struct RoundingStats {
    pub runs: usize,
    pub degree_failures: usize,
    pub bound_failures: usize,
    /// `(z_e, empirical frequency)` per edge.
    pub marginals: Vec<(f64, f64)>,
    pub mean_welfare: f64,
    pub lp_objective: f64,
}

pub fn rounding_stats<R: Rng + ?Sized>(rng: &mut R, runs: usize) -> Result<RoundingStats> {
    let (inst, graph, z, spec) = rounding_fixture();
    let groups = spec.resolve(&inst, usize::MAX)?;
    let left = graph.seller_nodes().len();
    let mut fdeg = vec![0.0f64; left + graph.buyer_nodes().len()];
    for (e, x) in z.z.iter().enumerate() {
        let (l, r) = graph.endpoints(e);
        let x = x.to_f64().unwrap_or(f64::NAN);
        fdeg[l] += x;
        fdeg[left + r] += x;
    }
    let mut hits = vec![0usize; z.z.len()];
    let (mut degree_failures, mut bound_failures, mut welfare_sum) = (0, 0, 0.0);
    for _ in 0..runs {
        let r = dependent_round(&z, &graph, rng);
        let mut deg = vec![0.0f64; fdeg.len()];
        for (e, &on) in r.indicator.iter().enumerate() {
            if on {
                hits[e] += 1;
                let (l, rr) = graph.endpoints(e);
                deg[l] += 1.0;
                deg[left + rr] += 1.0;
            }
        }
        if deg.iter().zip(&fdeg).any(|(d, f)| *d < (f - 1e-9).floor() || *d > (f + 1e-9).ceil()) {
            degree_failures += 1;
        }
        let counts = r.assignment.buyer_counts(&inst);
        if groups.iter().any(|g| g.total(&counts) < g.r as usize) {
            bound_failures += 1;
        }
        welfare_sum += welfare(&r.assignment, &inst)?.to_f64();
    }
    Ok(RoundingStats {
        runs,
        degree_failures,
        bound_failures,
        marginals: z.z.iter().zip(&hits).map(|(x, &h)| (x.to_f64().unwrap_or(f64::NAN), h as f64 / runs as f64)).collect(),
        mean_welfare: welfare_sum / runs as f64,
        lp_objective: z.objective_f64(),
    })
}

fn rounding(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let s = rounding_stats(rng, 20_000)?;
    let n = s.runs as f64;
    let marginal_fail: Vec<String> = s
        .marginals
        .iter()
        .enumerate()
        .filter(|(_, &(z, f))| (f - z).abs() > 3.0 * (z * (1.0 - z) / n).sqrt())
        .map(|(e, (z, f))| format!("edge {e}: z = {z}, observed {f}"))
        .collect();
    let gap = (s.mean_welfare - s.lp_objective).abs() / s.lp_objective;
    let count = |k: usize, what: &str| if k == 0 { vec![] } else { vec![format!("{k} runs broke {what}")] };
    Ok(vec![
        CheckOutcome::new("degrees stay within floor and ceiling", count(s.degree_failures, "a degree"), s.runs),
        CheckOutcome::new("edge marginals within 3 standard errors", marginal_fail, s.marginals.len()),
        CheckOutcome::new(
            "mean welfare within 2% of the LP objective",
            if gap <= 0.02 { vec![] } else { vec![format!("mean {} vs LP {}", s.mean_welfare, s.lp_objective)] },
            1,
        ),
        CheckOutcome::new("singleton bound met on every run", count(s.bound_failures, "the bound"), s.runs),
    ])
}

fn reductions(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let mut x3c_fail = Vec::new();
    for i in 0..100 {
        let t = if i % 2 == 0 { 6 } else { 9 };
        let q = 4 + (i / 2 % 2) as i64;
        let x = random_x3c(rng, t, 8);
        if !verify_reduction_x3c(&x, q)? {
            x3c_fail.push(serde_json::to_string(&x)?);
        }
    }
    let mut vc_fail = Vec::new();
    for _ in 0..100 {
        let g = random_vc(rng, 7);
        if !verify_reduction_vc(&g)? {
            vc_fail.push(serde_json::to_string(&g)?);
        }
    }
    Ok(vec![
        CheckOutcome::new("exact cover iff welfare reaches the threshold", x3c_fail, 100),
        CheckOutcome::new("vertex cover iff group bounds are feasible", vc_fail, 100),
    ])
}

fn leximin(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let caps = LeximinCaps::default();
    let mut solve_fail = Vec::new();
    let mut table_fail = Vec::new();
    for i in 0..200 {
        let inst = random_leximin_instance(rng, caps.max_units, caps.max_buyers);
        let got = solve_leximin(&inst);
        let want = brute_force_leximin(&inst, caps)?;
        if leximin_compare(&got.satisfaction, &want.satisfaction)? != std::cmp::Ordering::Equal {
            solve_fail.push(format!("instance {i}: {:?} vs {:?}", got.satisfaction.to_f64(), want.satisfaction.to_f64()));
        }
        if let Err(m) = build_ratio_ranks(inst.k(), &inst.gammas()).check() {
            table_fail.push(format!("instance {i}: {m}"));
        }
    }
    Ok(vec![
        CheckOutcome::new("leximin solver matches brute force", solve_fail, 200),
        CheckOutcome::new("benefit tables satisfy their properties", table_fail, 200),
    ])
}
