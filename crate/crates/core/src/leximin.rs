//! Leximin-fair allocation of identical units from a single seller.
//!
//! Each buyer's `ℓ`th unit earns an increment ranked by the satisfaction
//! ratio `(ℓ−1)/γ` it starts from; lower ratios earn increments that
//! dominate everything above them. Increments starting from the same ratio
//! are ordered by the ratio `ℓ/γ` they reach, higher first. Without that
//! tie-break one unit offered to buyers with γ = 2 and γ = 1 could go to
//! either, and only the second choice is leximin-largest. Maximizing total benefit
//! over a slot-expanded bipartite graph then yields a leximin-largest
//! satisfaction vector. Increments are `base^rank` and are handled as exact
//! rank-count vectors, never as floats.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{max_weight_matching, Cost, WeightedBipartiteGraph};
use crate::model::{AgentId, Pair, SatisfactionVector, TradingAssignment, UnitRef};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeximinBuyer {
    pub id: AgentId,
    pub gamma: u32,
}

/// `k` identical units of one seller, buyers with requirements, and
/// unit–buyer compatibility (0-based unit and buyer indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeximinInstance {
    k: usize,
    buyers: Vec<LeximinBuyer>,
    edges: BTreeSet<(usize, usize)>,
}

impl LeximinInstance {
    pub fn new(k: usize, buyers: Vec<LeximinBuyer>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().collect();
        let mut problems = Vec::new();
        if k == 0 {
            problems.push("k must be at least 1".to_string());
        }
        let mut ids = BTreeSet::new();
        for b in &buyers {
            if b.gamma == 0 {
                problems.push(format!("buyer {} has gamma 0", b.id));
            }
            if !ids.insert(&b.id) {
                problems.push(format!("duplicate buyer id {}", b.id));
            }
        }
        for &(u, b) in &edges {
            if u >= k || b >= buyers.len() {
                problems.push(format!("edge (unit {}, buyer {}) is out of range", u + 1, b + 1));
            }
        }
        if problems.is_empty() {
            Ok(LeximinInstance { k, buyers, edges })
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Edges given as (0-based unit, buyer id).
    pub fn with_ids(k: usize, buyers: Vec<LeximinBuyer>, edges: &[(usize, AgentId)]) -> Result<Self> {
        let mut problems = Vec::new();
        let mut resolved = Vec::with_capacity(edges.len());
        for (u, id) in edges {
            match buyers.iter().position(|b| &b.id == id) {
                Some(b) => resolved.push((*u, b)),
                None => problems.push(format!("edge names unknown buyer {id}")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Self::new(k, buyers, resolved)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn buyers(&self) -> &[LeximinBuyer] {
        &self.buyers
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_compatible(&self, unit: usize, buyer: usize) -> bool {
        self.edges.contains(&(unit, buyer))
    }

    pub fn gammas(&self) -> Vec<u32> {
        self.buyers.iter().map(|b| b.gamma).collect()
    }
}

/// Sparse vector of counts per rank, ordered by the highest rank where two
/// vectors differ. This is the order of `Σ count·base^rank` for any base
/// exceeding every count, without fixing the base.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RankVector(BTreeMap<usize, i64>);

impl RankVector {
    pub fn unit(rank: usize) -> Self {
        RankVector(BTreeMap::from([(rank, 1)]))
    }

    pub fn count(&self, rank: usize) -> i64 {
        self.0.get(&rank).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.0.iter().map(|(&r, &c)| (r, c))
    }

    /// `Σ count·base^rank` as a big integer.
    pub fn to_bigint(&self, base: u64) -> BigInt {
        self.0.iter().map(|(&r, &c)| BigInt::from(c) * BigInt::from(base).pow(r as u32)).sum()
    }

    fn combine(mut self, other: &RankVector, sign: i64) -> Self {
        for (&r, &c) in &other.0 {
            let entry = self.0.entry(r).or_insert(0);
            *entry += sign * c;
            if *entry == 0 {
                self.0.remove(&r);
            }
        }
        self
    }
}

impl Add for RankVector {
    type Output = RankVector;
    fn add(self, rhs: RankVector) -> RankVector {
        self.combine(&rhs, 1)
    }
}

impl Sub for RankVector {
    type Output = RankVector;
    fn sub(self, rhs: RankVector) -> RankVector {
        self.combine(&rhs, -1)
    }
}

impl Neg for RankVector {
    type Output = RankVector;
    fn neg(self) -> RankVector {
        RankVector(self.0.into_iter().map(|(r, c)| (r, -c)).collect())
    }
}

impl Ord for RankVector {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut ranks: Vec<usize> = self.0.keys().chain(other.0.keys()).copied().collect();
        ranks.sort_unstable();
        ranks.dedup();
        for r in ranks.into_iter().rev() {
            match self.count(r).cmp(&other.count(r)) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for RankVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Cost for RankVector {
    fn zero() -> Self {
        RankVector::default()
    }

    fn times(&self, k: i64) -> Self {
        if k == 0 {
            return RankVector::default();
        }
        RankVector(self.0.iter().map(|(&r, &c)| (r, c * k)).collect())
    }
}

/// Ratio set, ranks, and per-buyer increment ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenefitTable {
    /// Every `a/b` with `1 ≤ a ≤ b ≤ k'`, plus 0, in descending order.
    pub ratios: Vec<Ratio<u64>>,
    /// Numeric base of the increments: `|B|·k'`, raised to `|B| + 1` when
    /// that is smaller so no rank can hold `base` increments.
    pub base: u64,
    pub gammas: Vec<u32>,
    /// `delta_ranks[j][ℓ−1]` is the rank of `(ℓ−1)/γ_j`.
    pub delta_ranks: Vec<Vec<usize>>,
    /// Exponent of `δ_j(ℓ)`: the start rank, refined by the end ratio.
    pub weight_keys: Vec<Vec<usize>>,
}

/// Builds the benefit table for `k` units and buyer requirements `gammas`.
///
/// Ratios range over `1..=k'` with `k' = max(k, max γ)` so every
/// `(ℓ−1)/γ` is present even when a requirement exceeds the supply.
pub fn build_ratio_ranks(k: usize, gammas: &[u32]) -> BenefitTable {
    let kp = gammas.iter().map(|&g| g as u64).max().unwrap_or(0).max(k as u64).max(1);
    let mut set = BTreeSet::new();
    set.insert(Ratio::zero());
    for den in 1..=kp {
        for num in 1..=den {
            set.insert(Ratio::new(num, den));
        }
    }
    let ratios: Vec<Ratio<u64>> = set.into_iter().rev().collect();
    let rank = |q: Ratio<u64>| ratios.iter().position(|&x| x == q).expect("ratio present") + 1;
    let delta_ranks: Vec<Vec<usize>> =
        gammas.iter().map(|&g| (1..=g as u64).map(|l| rank(Ratio::new(l - 1, g as u64))).collect()).collect();
    let width = ratios.len() + 1;
    let weight_keys = gammas
        .iter()
        .zip(&delta_ranks)
        .map(|(&g, ranks)| {
            ranks.iter().enumerate().map(|(i, &start)| start * width + width - rank(Ratio::new(i as u64 + 1, g as u64))).collect()
        })
        .collect();
    let buyers = gammas.len() as u64;
    let base = (buyers * kp).max(buyers + 1).max(2);
    BenefitTable { ratios, base, gammas: gammas.to_vec(), delta_ranks, weight_keys }
}

impl BenefitTable {
    /// 1-based rank of `q`, the position in descending order.
    pub fn rank(&self, q: Ratio<u64>) -> Option<usize> {
        self.ratios.iter().position(|&x| x == q).map(|i| i + 1)
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    /// Largest exponent any increment can have.
    pub fn top_key(&self) -> usize {
        (self.len() + 1) * (self.len() + 1) - 1
    }

    /// Increment of buyer `j`'s `ℓ`th unit (1-based), scaled by
    /// `base^top_key`.
    pub fn delta(&self, j: usize, l: usize) -> BigInt {
        BigInt::from(self.base).pow(self.weight_keys[j][l - 1] as u32)
    }

    /// Benefit of `ℓ` units to buyer `j`, scaled like [`Self::delta`].
    pub fn mu(&self, j: usize, l: usize) -> BigInt {
        (1..=l).map(|i| self.delta(j, i)).sum()
    }

    /// Checks, in exact integers, the benefit-function validity properties
    /// and the dominance bound: `δ_j(ℓ)` exceeds the sum of all increments
    /// `δ_j'(ℓ')` that start from a strictly higher ratio, and also the sum
    /// of all increments with a smaller weight key.
    pub fn check(&self) -> std::result::Result<(), String> {
        let scale = BigInt::from(self.base).pow(self.top_key() as u32);
        for (j, &g) in self.gammas.iter().enumerate() {
            if !self.mu(j, 0).is_zero() {
                return Err(format!("buyer {}: mu(0) is not 0", j + 1));
            }
            for l in 1..=g as usize {
                let d = self.delta(j, l);
                if d <= BigInt::zero() {
                    return Err(format!("buyer {}: mu decreases at {l}", j + 1));
                }
                if d > scale {
                    return Err(format!("buyer {}: increment {l} exceeds 1", j + 1));
                }
                if l > 1 && d > self.delta(j, l - 1) {
                    return Err(format!("buyer {}: increment {l} exceeds increment {}", j + 1, l - 1));
                }
                let from = Ratio::new(l as u64 - 1, g as u64);
                let above: BigInt = self
                    .gammas
                    .iter()
                    .enumerate()
                    .flat_map(|(j2, &g2)| (1..=g2 as usize).map(move |l2| (j2, g2, l2)))
                    .filter(|&(_, g2, l2)| Ratio::new(l2 as u64 - 1, g2 as u64) > from)
                    .map(|(j2, _, l2)| self.delta(j2, l2))
                    .sum();
                if d <= above {
                    return Err(format!("buyer {}: increment {l} does not dominate higher ratios", j + 1));
                }
                let key = self.weight_keys[j][l - 1];
                let lighter: BigInt = self
                    .weight_keys
                    .iter()
                    .flatten()
                    .filter(|&&k2| k2 < key)
                    .map(|&k2| BigInt::from(self.base).pow(k2 as u32))
                    .sum();
                if d <= lighter {
                    return Err(format!("buyer {}: increment {l} does not dominate lighter increments", j + 1));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeximinSolution {
    /// Seller agent 0 is the single seller; buyer units are slots.
    pub assignment: TradingAssignment,
    pub counts: Vec<usize>,
    pub satisfaction: SatisfactionVector,
    /// Total benefit as rank counts.
    pub benefit: RankVector,
}

impl LeximinSolution {
    fn from_units(instance: &LeximinInstance, units_of: Vec<Vec<usize>>, benefit: RankVector) -> Self {
        let mut assignment = TradingAssignment::new();
        for (b, units) in units_of.iter().enumerate() {
            for (slot, &u) in units.iter().enumerate() {
                assignment.insert(Pair::new(UnitRef::new(0, u), UnitRef::new(b, slot)));
            }
        }
        let counts: Vec<usize> = units_of.iter().map(Vec::len).collect();
        let gammas: Vec<usize> = instance.buyers.iter().map(|b| b.gamma as usize).collect();
        let satisfaction = SatisfactionVector::from_counts(&counts, &gammas);
        LeximinSolution { assignment, counts, satisfaction, benefit }
    }

    /// (unit, buyer) pairs, 0-based.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.assignment.pairs().map(|p| (p.seller.unit, p.buyer.agent)).collect()
    }
}

/// Leximin-largest assignment via a maximum-benefit matching between units
/// and buyer slots `(b, ℓ)`, `ℓ ≤ γ_b`.
pub fn solve_leximin(instance: &LeximinInstance) -> LeximinSolution {
    let table = build_ratio_ranks(instance.k, &instance.gammas());
    let mut slots = Vec::new();
    let mut slot_of = Vec::with_capacity(instance.buyers.len());
    for (b, buyer) in instance.buyers.iter().enumerate() {
        slot_of.push(slots.len());
        slots.extend((0..buyer.gamma as usize).map(|l| (b, l)));
    }
    let mut edges = Vec::new();
    for &(u, b) in &instance.edges {
        for l in 0..instance.buyers[b].gamma as usize {
            edges.push((u, slot_of[b] + l, RankVector::unit(table.weight_keys[b][l])));
        }
    }
    let g = WeightedBipartiteGraph::new(instance.k, slots.len(), edges).expect("slot graph is well formed");
    let matching = max_weight_matching(&g);

    let mut units_of = vec![Vec::new(); instance.buyers.len()];
    for &e in &matching.edges {
        let (u, s, _) = &g.edges()[e];
        units_of[slots[*s].0].push(*u);
    }
    for units in &mut units_of {
        units.sort_unstable();
    }
    // relabel onto slots 1..m; the benefit only depends on the counts
    let benefit = benefit_of(&table, &units_of.iter().map(Vec::len).collect::<Vec<_>>());
    debug_assert!(benefit >= matching.weight);
    debug_assert!(benefit.counts().all(|(_, c)| (0..table.base as i64).contains(&c)));
    LeximinSolution::from_units(instance, units_of, benefit)
}

fn benefit_of(table: &BenefitTable, counts: &[usize]) -> RankVector {
    counts
        .iter()
        .enumerate()
        .flat_map(|(b, &m)| (0..m).map(move |l| RankVector::unit(table.weight_keys[b][l])))
        .fold(RankVector::default(), |a, x| a + x)
}

/// Compares satisfaction vectors by sorting each ascending and comparing
/// lexicographically.
pub fn leximin_compare(a: &SatisfactionVector, b: &SatisfactionVector) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let mut x = a.0.clone();
    let mut y = b.0.clone();
    x.sort();
    y.sort();
    Ok(x.cmp(&y))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeximinCaps {
    pub max_units: usize,
    pub max_buyers: usize,
}

impl Default for LeximinCaps {
    fn default() -> Self {
        LeximinCaps { max_units: 6, max_buyers: 4 }
    }
}

/// Exhaustive oracle: every map from units to a compatible buyer or to
/// nobody, within each buyer's requirement.
pub fn brute_force_leximin(instance: &LeximinInstance, caps: LeximinCaps) -> Result<LeximinSolution> {
    if instance.k > caps.max_units {
        return Err(Error::CapExceeded { what: "leximin units", size: instance.k, cap: caps.max_units });
    }
    if instance.buyers.len() > caps.max_buyers {
        return Err(Error::CapExceeded { what: "leximin buyers", size: instance.buyers.len(), cap: caps.max_buyers });
    }
    let gammas: Vec<usize> = instance.buyers.iter().map(|b| b.gamma as usize).collect();
    let mut choice = vec![None; instance.k];
    let mut counts = vec![0usize; instance.buyers.len()];
    let mut best: Option<(SatisfactionVector, Vec<Option<usize>>)> = None;
    search(instance, &gammas, 0, &mut choice, &mut counts, &mut best);
    let (_, choice) = best.expect("the empty assignment is always considered");
    let mut units_of = vec![Vec::new(); instance.buyers.len()];
    for (u, c) in choice.iter().enumerate() {
        if let Some(b) = c {
            units_of[*b].push(u);
        }
    }
    let table = build_ratio_ranks(instance.k, &instance.gammas());
    let benefit = benefit_of(&table, &units_of.iter().map(Vec::len).collect::<Vec<_>>());
    Ok(LeximinSolution::from_units(instance, units_of, benefit))
}

fn search(
    instance: &LeximinInstance,
    gammas: &[usize],
    u: usize,
    choice: &mut Vec<Option<usize>>,
    counts: &mut Vec<usize>,
    best: &mut Option<(SatisfactionVector, Vec<Option<usize>>)>,
) {
    if u == instance.k {
        let v = SatisfactionVector::from_counts(counts, gammas);
        let better = match best {
            None => true,
            Some((bv, _)) => leximin_compare(&v, bv).expect("same length") == Ordering::Greater,
        };
        if better {
            *best = Some((v, choice.clone()));
        }
        return;
    }
    choice[u] = None;
    search(instance, gammas, u + 1, choice, counts, best);
    for b in 0..gammas.len() {
        if counts[b] < gammas[b] && instance.is_compatible(u, b) {
            choice[u] = Some(b);
            counts[b] += 1;
            search(instance, gammas, u + 1, choice, counts, best);
            counts[b] -= 1;
        }
    }
    choice[u] = None;
}

/// Units sold by the leximin solution against the most units any
/// assignment can sell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityReport {
    pub leximin_units: usize,
    pub max_units: usize,
}

pub fn cardinality_report(instance: &LeximinInstance, solution: &LeximinSolution) -> CardinalityReport {
    let mut slots = 0;
    let mut slot_of = Vec::new();
    for b in &instance.buyers {
        slot_of.push(slots);
        slots += b.gamma as usize;
    }
    let edges = instance
        .edges
        .iter()
        .flat_map(|&(u, b)| (0..instance.buyers[b].gamma as usize).map(move |l| (u, b, l)))
        .map(|(u, b, l)| (u, slot_of[b] + l, 1i64))
        .collect();
    let g = WeightedBipartiteGraph::new(instance.k, slots, edges).expect("slot graph is well formed");
    CardinalityReport { leximin_units: solution.assignment.len(), max_units: max_weight_matching(&g).edges.len() }
}

/// Sum of δ over a satisfaction profile as a rational of the true benefit,
/// for reporting. Not used by the solver.
pub fn benefit_ratio(table: &BenefitTable, benefit: &RankVector) -> Ratio<BigInt> {
    let scale = BigInt::from(table.base).pow(table.top_key() as u32);
    Ratio::new(benefit.to_bigint(table.base), scale)
}
