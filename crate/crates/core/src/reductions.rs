//! Hardness gadgets with exhaustive equivalence checks.
//!
//! Exact cover by 3-sets maps to maximum welfare with non-monotone buyer
//! values; minimum vertex cover maps to feasibility of group lower bounds.
//! The verifiers decide both sides exhaustively and compare.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{feas_demog_bruteforce, FairnessSpec, Group};
use crate::model::{welfare, Agent, MarketInstance};
use crate::value::Value;
use crate::welfare::{brute_force_max_welfare, BruteForceOptions, ValueRule};

/// Smallest legal multiplier for the cover gadget.
pub const DEFAULT_Q: i64 = 4;

/// Unit cap for the brute-force side of the verifiers.
pub const VERIFY_UNIT_CAP: usize = 48;

/// Universe `{1..t}` and a collection of 3-element subsets. Elements are
/// 1-based in JSON and stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "X3cJson", into = "X3cJson")]
pub struct X3cInstance {
    t: usize,
    sets: Vec<[usize; 3]>,
}

#[derive(Serialize, Deserialize)]
struct X3cJson {
    t: usize,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<X3cJson> for X3cInstance {
    type Error = Error;
    fn try_from(j: X3cJson) -> Result<Self> {
        let mut problems = Vec::new();
        let mut sets = Vec::with_capacity(j.sets.len());
        for (i, s) in j.sets.iter().enumerate() {
            match (s.len(), s.iter().all(|&e| e >= 1)) {
                (3, true) => sets.push([s[0] - 1, s[1] - 1, s[2] - 1]),
                (3, false) => problems.push(format!("set {} has element 0; elements are 1-based", i + 1)),
                (n, _) => problems.push(format!("set {} has {n} elements, expected 3", i + 1)),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        X3cInstance::new(j.t, sets)
    }
}

impl From<X3cInstance> for X3cJson {
    fn from(x: X3cInstance) -> Self {
        X3cJson { t: x.t, sets: x.sets.iter().map(|s| s.iter().map(|e| e + 1).collect()).collect() }
    }
}

impl X3cInstance {
    pub fn new(t: usize, sets: Vec<[usize; 3]>) -> Result<Self> {
        let mut problems = Vec::new();
        if !t.is_multiple_of(3) {
            problems.push(format!("universe size {t} is not divisible by 3"));
        }
        let mut sorted = Vec::with_capacity(sets.len());
        for (i, s) in sets.into_iter().enumerate() {
            let mut s = s;
            s.sort_unstable();
            if s[0] == s[1] || s[1] == s[2] {
                problems.push(format!("set {} repeats an element", i + 1));
            }
            if s[2] >= t {
                problems.push(format!("set {} has element {} outside 1..={t}", i + 1, s[2] + 1));
            }
            sorted.push(s);
        }
        if problems.is_empty() {
            Ok(X3cInstance { t, sets: sorted })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn sets(&self) -> &[[usize; 3]] {
        &self.sets
    }
}

/// Simple graph on vertices `0..n` with a cover budget `k`. Vertices are
/// 1-based in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VcJson", into = "VcJson")]
pub struct VcInstance {
    n: usize,
    edges: Vec<(usize, usize)>,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct VcJson {
    n: usize,
    edges: Vec<(usize, usize)>,
    k: usize,
}

impl TryFrom<VcJson> for VcInstance {
    type Error = Error;
    fn try_from(j: VcJson) -> Result<Self> {
        if j.edges.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::Validation(vec!["vertices are 1-based".into()]));
        }
        VcInstance::new(j.n, j.edges.into_iter().map(|(a, b)| (a - 1, b - 1)).collect(), j.k)
    }
}

impl From<VcInstance> for VcJson {
    fn from(g: VcInstance) -> Self {
        VcJson { n: g.n, edges: g.edges.iter().map(|&(a, b)| (a + 1, b + 1)).collect(), k: g.k }
    }
}

impl VcInstance {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, k: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if k > n {
            problems.push(format!("budget {k} exceeds vertex count {n}"));
        }
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                problems.push(format!("edge ({}, {}) is out of range", a + 1, b + 1));
            } else if a == b {
                problems.push(format!("self-loop at vertex {}", a + 1));
            } else if seen.insert((a.min(b), a.max(b))) {
                normalized.push((a.min(b), a.max(b)));
            }
        }
        if problems.is_empty() {
            Ok(VcInstance { n, edges: normalized, k })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Cover gadget: one single-unit seller (value 1) per element, one buyer per
/// set with units valued `(0, 0, Q)`, seller `u` compatible with buyer `C`
/// iff `u ∈ C`. Returns the instance and the threshold `ℓ(Q−3)`.
///
/// The buyer values are not monotone and sit below the seller value on two
/// units, so the threshold is reached only when value order is not enforced;
/// the verifier runs the brute force that way.
pub fn x3c_to_maxwelfare(x: &X3cInstance, q: i64) -> Result<(MarketInstance, Value)> {
    if q < 4 {
        return Err(Error::Validation(vec![format!("Q = {q}, must be at least 4")]));
    }
    let sellers = (0..x.t).map(|u| Agent::new(format!("u{}", u + 1), 0, vec![Value::from_int(1)])).collect();
    let buyers = (0..x.sets.len())
        .map(|j| Agent::new(format!("C{}", j + 1), 0, vec![Value::from_int(0), Value::from_int(0), Value::from_int(q)]))
        .collect();
    let compat: Vec<(usize, usize)> =
        x.sets.iter().enumerate().flat_map(|(j, s)| s.iter().map(move |&u| (u, j))).collect();
    let instance = MarketInstance::from_indices(sellers, buyers, compat)?;
    let lambda = Value::from_int((x.t / 3) as i64 * (q - 3));
    Ok((instance, lambda))
}

/// Cover-to-fairness gadget: `k` single-unit sellers (value 1), one
/// single-unit buyer (value 2) per vertex, complete compatibility, and a
/// group `({b_x, b_y}, 1)` per edge.
pub fn minvc_to_feasdemog(g: &VcInstance) -> Result<(MarketInstance, FairnessSpec)> {
    let sellers = (0..g.k).map(|i| Agent::new(format!("s{}", i + 1), 0, vec![Value::from_int(1)])).collect();
    let buyers: Vec<Agent> = (0..g.n).map(|v| Agent::new(format!("v{}", v + 1), 0, vec![Value::from_int(2)])).collect();
    let groups = g
        .edges
        .iter()
        .map(|&(a, b)| Group { buyers: vec![buyers[a].id.clone(), buyers[b].id.clone()], r: 1 })
        .collect();
    let instance = MarketInstance::complete(sellers, buyers)?;
    Ok((instance, FairnessSpec::new(groups)))
}

/// Exhaustive exact-cover search: branch on the sets containing the lowest
/// uncovered element.
pub fn has_exact_cover(x: &X3cInstance) -> bool {
    fn go(x: &X3cInstance, covered: &mut [bool]) -> bool {
        let Some(e) = covered.iter().position(|c| !c) else { return true };
        for s in x.sets.iter().filter(|s| s.contains(&e)) {
            if s.iter().any(|&u| covered[u]) {
                continue;
            }
            s.iter().for_each(|&u| covered[u] = true);
            let found = go(x, covered);
            s.iter().for_each(|&u| covered[u] = false);
            if found {
                return true;
            }
        }
        false
    }
    go(x, &mut vec![false; x.t])
}

/// Exhaustive vertex-cover search over subsets of size at most `k`, pruned
/// by branching on an uncovered edge.
pub fn has_vertex_cover(g: &VcInstance) -> bool {
    fn go(edges: &[(usize, usize)], chosen: &mut Vec<bool>, budget: usize) -> bool {
        let Some(&(a, b)) = edges.iter().find(|&&(a, b)| !chosen[a] && !chosen[b]) else { return true };
        if budget == 0 {
            return false;
        }
        for v in [a, b] {
            chosen[v] = true;
            let found = go(edges, chosen, budget - 1);
            chosen[v] = false;
            if found {
                return true;
            }
        }
        false
    }
    go(&g.edges, &mut vec![false; g.n], g.k)
}

/// Whether "exact cover exists" agrees with "brute-force welfare ≥ λ".
pub fn verify_reduction_x3c(x: &X3cInstance, q: i64) -> Result<bool> {
    let (instance, lambda) = x3c_to_maxwelfare(x, q)?;
    let options = BruteForceOptions { max_units: VERIFY_UNIT_CAP, value_rule: ValueRule::Ignored };
    let best = brute_force_max_welfare(&instance, options)?;
    Ok(has_exact_cover(x) == (welfare(&best, &instance)? >= lambda))
}

/// Whether "cover of size ≤ k exists" agrees with gadget feasibility.
pub fn verify_reduction_vc(g: &VcInstance) -> Result<bool> {
    let (instance, spec) = minvc_to_feasdemog(g)?;
    let feasible = feas_demog_bruteforce(&instance, &spec, BruteForceOptions::with_cap(VERIFY_UNIT_CAP))?;
    Ok(has_vertex_cover(g) == feasible)
}

/// Random cover instance on `t` elements with up to `max_sets` distinct sets.
pub fn random_x3c<R: Rng + ?Sized>(rng: &mut R, t: usize, max_sets: usize) -> X3cInstance {
    let count = rng.random_range(1..=max_sets.max(1));
    let mut sets = BTreeSet::new();
    for _ in 0..count {
        let mut s = [0; 3];
        loop {
            for e in &mut s {
                *e = rng.random_range(0..t);
            }
            s.sort_unstable();
            if s[0] != s[1] && s[1] != s[2] {
                break;
            }
        }
        sets.insert(s);
    }
    X3cInstance::new(t, sets.into_iter().collect()).expect("generated sets are valid")
}

/// Random graph on up to `max_n` vertices with edge probability 1/2 and a
/// uniform budget.
pub fn random_vc<R: Rng + ?Sized>(rng: &mut R, max_n: usize) -> VcInstance {
    let n = rng.random_range(1..=max_n.max(1));
    let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.random_bool(0.5)).collect();
    let k = rng.random_range(0..=n);
    VcInstance::new(n, edges, k).expect("generated graph is valid")
}
