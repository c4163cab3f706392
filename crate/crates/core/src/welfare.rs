//! Welfare-maximizing trading assignments.
//!
//! With non-decreasing seller values and non-increasing buyer values, a
//! maximum-weight matching of the resources–needs graph followed by a
//! prefix repair is optimal. [`brute_force_max_welfare`] is an exhaustive
//! oracle for small instances that never touches the graph or the matching
//! kernel.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::matching::max_weight_matching;
use crate::model::{
    build_resources_needs_graph, validate_assignment, welfare, MarketInstance, Pair, TradingAssignment, UnitRef,
    Violation,
};
use crate::value::Value;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Run on non-monotone instances instead of refusing; the result is
    /// then valid but carries no optimality guarantee.
    pub allow_non_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WelfareSolution {
    pub assignment: TradingAssignment,
    pub welfare: Value,
    /// Weight of the maximum-weight matching before repair.
    pub matching_weight: Value,
    /// Set when the instance was not monotone.
    pub heuristic: bool,
}

pub fn solve_max_welfare(instance: &MarketInstance, options: SolveOptions) -> Result<WelfareSolution> {
    let violations = instance.monotonicity_violations();
    let heuristic = !violations.is_empty();
    if heuristic && !options.allow_non_monotone {
        return Err(Error::NonMonotone(violations.join("; ")));
    }
    let graph = build_resources_needs_graph(instance);
    let matching = max_weight_matching(&graph.to_bipartite());
    let raw = graph.assignment_from_edges(matching.edges.iter().copied());
    let mut assignment = repair_prefix(&raw, instance);
    if heuristic {
        assignment = drop_value_violations(assignment, instance);
    }
    let welfare = welfare(&assignment, instance)?;
    Ok(WelfareSolution {
        assignment,
        welfare,
        matching_weight: Value::from_micros(matching.weight),
        heuristic,
    })
}

/// Non-monotone repair can move a pair onto a unit the buyer values below
/// the seller. Drop such pairs and re-repair until the assignment is valid.
fn drop_value_violations(mut assignment: TradingAssignment, instance: &MarketInstance) -> TradingAssignment {
    loop {
        let bad: Vec<Pair> = validate_assignment(&assignment, instance)
            .into_iter()
            .filter_map(|v| match v {
                Violation::ValueOrder { pair, .. } => Some(pair),
                _ => None,
            })
            .collect();
        if bad.is_empty() {
            return assignment;
        }
        for p in &bad {
            assignment.remove(p);
        }
        assignment = repair_prefix(&assignment, instance);
    }
}

/// Restores the per-agent prefix order of a matching.
///
/// Each agent's matched units are relabelled onto its first units, keeping
/// their relative order, so every matched unit only ever moves to a lower
/// index. Under monotone values a move never lowers a buyer value or raises
/// a seller value, hence welfare never drops and value order is kept. Each
/// pair endpoint is relabelled at most once.
pub fn repair_prefix(raw: &TradingAssignment, _instance: &MarketInstance) -> TradingAssignment {
    let mut pairs: Vec<Pair> = raw.pairs().copied().collect();

    let mut by_seller: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut by_buyer: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        by_seller.entry(p.seller.agent).or_default().push(i);
        by_buyer.entry(p.buyer.agent).or_default().push(i);
    }
    for mut ix in by_seller.into_values() {
        ix.sort_by_key(|&i| pairs[i].seller.unit);
        for (rank, i) in ix.into_iter().enumerate() {
            pairs[i].seller.unit = rank;
        }
    }
    for mut ix in by_buyer.into_values() {
        ix.sort_by_key(|&i| pairs[i].buyer.unit);
        for (rank, i) in ix.into_iter().enumerate() {
            pairs[i].buyer.unit = rank;
        }
    }
    pairs.into_iter().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ValueRule {
    /// Every pair must satisfy buyer value ≥ seller value.
    #[default]
    Enforced,
    /// Pairs may trade at a loss. Only the hardness gadgets use this.
    Ignored,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BruteForceOptions {
    /// Refuse instances with more total (seller + buyer) units than this.
    pub max_units: usize,
    pub value_rule: ValueRule,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        BruteForceOptions { max_units: 10, value_rule: ValueRule::Enforced }
    }
}

impl BruteForceOptions {
    pub fn with_cap(max_units: usize) -> Self {
        BruteForceOptions { max_units, ..Self::default() }
    }
}

/// Exhaustive maximum-welfare oracle.
pub fn brute_force_max_welfare(instance: &MarketInstance, options: BruteForceOptions) -> Result<TradingAssignment> {
    Ok(brute_force_max_welfare_where(instance, options, |_| true)?
        .expect("the empty assignment is always admissible"))
}

/// Best valid assignment whose per-buyer unit counts pass `admissible`,
/// or `None` when no valid assignment does.
pub fn brute_force_max_welfare_where(
    instance: &MarketInstance,
    options: BruteForceOptions,
    admissible: impl Fn(&[usize]) -> bool,
) -> Result<Option<TradingAssignment>> {
    check_cap(instance, options)?;
    let mut best: Option<(Value, Vec<Option<usize>>)> = None;
    for_each_allocation(instance, options.value_rule, |alloc| {
        if admissible(alloc.counts) {
            let w = alloc.welfare();
            if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                best = Some((w, alloc.choice.to_vec()));
            }
        }
        ControlFlow::Continue(())
    });
    Ok(best.map(|(_, choice)| realize(instance, &choice)))
}

/// Whether any valid assignment has per-buyer counts passing `admissible`.
pub fn brute_force_exists(
    instance: &MarketInstance,
    options: BruteForceOptions,
    admissible: impl Fn(&[usize]) -> bool,
) -> Result<bool> {
    check_cap(instance, options)?;
    let mut found = false;
    for_each_allocation(instance, options.value_rule, |alloc| {
        if admissible(alloc.counts) {
            found = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    Ok(found)
}

fn check_cap(instance: &MarketInstance, options: BruteForceOptions) -> Result<()> {
    let units = instance.total_units();
    if units > options.max_units {
        return Err(Error::CapExceeded { what: "total units", size: units, cap: options.max_units });
    }
    Ok(())
}

/// Seller units in flattened (seller, unit) order.
fn seller_units(instance: &MarketInstance) -> Vec<UnitRef> {
    instance
        .sellers()
        .iter()
        .enumerate()
        .flat_map(|(s, a)| (0..a.unit_count()).map(move |u| UnitRef::new(s, u)))
        .collect()
}

pub(crate) struct Allocation<'a> {
    instance: &'a MarketInstance,
    units: &'a [UnitRef],
    /// Receiving buyer of each seller unit.
    choice: &'a [Option<usize>],
    /// Units received per buyer.
    counts: &'a [usize],
}

impl Allocation<'_> {
    /// Welfare is fixed by which seller units go to which buyer: a buyer
    /// receiving `m` units uses its first `m` units, whatever the pairing.
    fn welfare(&self) -> Value {
        let bought: Value = self
            .counts
            .iter()
            .enumerate()
            .map(|(b, &m)| self.instance.buyers()[b].units[..m].iter().sum::<Value>())
            .sum();
        let sold: Value = self
            .units
            .iter()
            .zip(self.choice)
            .filter(|(_, c)| c.is_some())
            .map(|(u, _)| self.instance.sellers()[u.agent].units[u.unit])
            .sum();
        bought - sold
    }
}

/// Visits every distinct valid allocation of seller units to buyers.
///
/// Seller prefixes are respected by construction (unit `i` of a seller can
/// only be sold if unit `i - 1` was). A buyer receiving `m` units takes its
/// units `1..=m`; with [`ValueRule::Enforced`] the allocation is kept only if
/// some pairing satisfies value order, which holds iff pairing both sides in
/// descending value order does.
pub(crate) fn for_each_allocation(
    instance: &MarketInstance,
    rule: ValueRule,
    mut visit: impl FnMut(&Allocation<'_>) -> ControlFlow<()>,
) {
    let units = seller_units(instance);
    let mut choice = vec![None; units.len()];
    let mut counts = vec![0usize; instance.buyers().len()];
    let mut ctx = Search { instance, units: &units, rule, choice: &mut choice, counts: &mut counts };
    let _ = ctx.recurse(0, &mut visit);
}

struct Search<'a> {
    instance: &'a MarketInstance,
    units: &'a [UnitRef],
    rule: ValueRule,
    choice: &'a mut Vec<Option<usize>>,
    counts: &'a mut Vec<usize>,
}

impl Search<'_> {
    fn recurse(&mut self, k: usize, visit: &mut impl FnMut(&Allocation<'_>) -> ControlFlow<()>) -> ControlFlow<()> {
        if k == self.units.len() {
            if self.rule == ValueRule::Enforced && !self.value_feasible() {
                return ControlFlow::Continue(());
            }
            let alloc = Allocation { instance: self.instance, units: self.units, choice: self.choice, counts: self.counts };
            return visit(&alloc);
        }
        self.choice[k] = None;
        self.recurse(k + 1, visit)?;

        let unit = self.units[k];
        let prefix_ok = unit.unit == 0 || self.choice[k - 1].is_some();
        if !prefix_ok {
            return ControlFlow::Continue(());
        }
        let buyers: Vec<usize> = self.instance.buyers_of(unit.agent).collect();
        for b in buyers {
            if self.counts[b] >= self.instance.buyers()[b].unit_count() {
                continue;
            }
            self.choice[k] = Some(b);
            self.counts[b] += 1;
            let flow = self.recurse(k + 1, visit);
            self.counts[b] -= 1;
            self.choice[k] = None;
            flow?;
        }
        ControlFlow::Continue(())
    }

    fn value_feasible(&self) -> bool {
        let mut received: Vec<Vec<Value>> = vec![Vec::new(); self.counts.len()];
        for (u, c) in self.units.iter().zip(self.choice.iter()) {
            if let Some(b) = c {
                received[*b].push(self.instance.sellers()[u.agent].units[u.unit]);
            }
        }
        received.iter_mut().enumerate().all(|(b, got)| {
            got.sort_unstable_by(|x, y| y.cmp(x));
            let mut wants = self.instance.buyers()[b].units[..got.len()].to_vec();
            wants.sort_unstable_by(|x, y| y.cmp(x));
            got.iter().zip(&wants).all(|(s, w)| w >= s)
        })
    }
}

/// Turns an allocation into concrete unit pairs: each buyer's received
/// seller units and its first `m` units, both in descending value order.
fn realize(instance: &MarketInstance, choice: &[Option<usize>]) -> TradingAssignment {
    let units = seller_units(instance);
    let mut received: BTreeMap<usize, Vec<UnitRef>> = BTreeMap::new();
    for (u, c) in units.iter().zip(choice) {
        if let Some(b) = c {
            received.entry(*b).or_default().push(*u);
        }
    }
    let mut out = TradingAssignment::new();
    for (b, mut got) in received {
        let seller_value = |u: &UnitRef| instance.sellers()[u.agent].units[u.unit];
        got.sort_by(|x, y| seller_value(y).cmp(&seller_value(x)).then(x.cmp(y)));
        let buyer = &instance.buyers()[b];
        let mut slots: Vec<usize> = (0..got.len()).collect();
        slots.sort_by(|&x, &y| buyer.units[y].cmp(&buyer.units[x]).then(x.cmp(&y)));
        for (s, j) in got.into_iter().zip(slots) {
            out.insert(Pair::new(s, UnitRef::new(b, j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{agent, small_instance, v};
    use crate::model::validate_assignment;

    #[test]
    fn small_instance_optimum() {
        let inst = small_instance();
        let sol = solve_max_welfare(&inst, SolveOptions::default()).unwrap();
        assert_eq!(sol.welfare, v(2));
        assert!(validate_assignment(&sol.assignment, &inst).is_empty());
        let oracle = brute_force_max_welfare(&inst, BruteForceOptions::default()).unwrap();
        assert_eq!(welfare(&oracle, &inst).unwrap(), v(2));
    }

    #[test]
    fn no_trade_cases() {
        let isolated =
            MarketInstance::from_indices(vec![agent("s", &[1, 2])], vec![agent("b", &[3, 2])], []).unwrap();
        let sol = solve_max_welfare(&isolated, SolveOptions::default()).unwrap();
        assert!(sol.assignment.is_empty());
        assert_eq!(sol.welfare, Value::ZERO);

        let cheap = MarketInstance::complete(vec![agent("s", &[5, 6])], vec![agent("b", &[4, 1])]).unwrap();
        let sol = solve_max_welfare(&cheap, SolveOptions::default()).unwrap();
        assert!(sol.assignment.is_empty());
    }

    #[test]
    fn refuses_non_monotone_without_override() {
        let inst = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b", &[0, 5])]).unwrap();
        assert!(matches!(solve_max_welfare(&inst, SolveOptions::default()), Err(Error::NonMonotone(_))));
        let sol = solve_max_welfare(&inst, SolveOptions { allow_non_monotone: true }).unwrap();
        assert!(sol.heuristic);
        assert!(validate_assignment(&sol.assignment, &inst).is_empty());
    }

    #[test]
    fn repair_leaves_valid_matchings_alone() {
        let inst = small_instance();
        let a: TradingAssignment = [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0))].into_iter().collect();
        assert_eq!(repair_prefix(&a, &inst), a);
    }

    #[test]
    fn repair_retargets_buyer_unit() {
        let inst = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b", &[4, 3])]).unwrap();
        let raw: TradingAssignment = [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 1))].into_iter().collect();
        let fixed = repair_prefix(&raw, &inst);
        assert_eq!(fixed.pairs().next().unwrap().buyer, UnitRef::new(0, 0));
        assert_eq!(welfare(&raw, &inst).unwrap(), v(2));
        assert_eq!(welfare(&fixed, &inst).unwrap(), v(3));
    }

    #[test]
    fn repair_retargets_seller_unit() {
        let inst = MarketInstance::complete(vec![agent("s", &[1, 2])], vec![agent("b", &[5])]).unwrap();
        let raw: TradingAssignment = [Pair::new(UnitRef::new(0, 1), UnitRef::new(0, 0))].into_iter().collect();
        let fixed = repair_prefix(&raw, &inst);
        assert_eq!(fixed.pairs().next().unwrap().seller, UnitRef::new(0, 0));
        assert_eq!(welfare(&fixed, &inst).unwrap() - welfare(&raw, &inst).unwrap(), v(1));
        assert!(validate_assignment(&fixed, &inst).is_empty());
    }

    #[test]
    fn brute_force_edge_cases() {
        let empty = MarketInstance::complete(vec![], vec![]).unwrap();
        assert!(brute_force_max_welfare(&empty, BruteForceOptions::default()).unwrap().is_empty());

        let one = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b", &[2])]).unwrap();
        let a = brute_force_max_welfare(&one, BruteForceOptions::default()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(welfare(&a, &one).unwrap(), v(1));

        let big = MarketInstance::complete(vec![agent("s", &[1; 6])], vec![agent("b", &[2; 6])]).unwrap();
        assert!(matches!(
            brute_force_max_welfare(&big, BruteForceOptions::default()),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn brute_force_respects_value_rule() {
        // buyer values its first unit below the seller; only the relaxed rule trades
        let inst = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b", &[0])]).unwrap();
        let enforced = brute_force_max_welfare(&inst, BruteForceOptions::default()).unwrap();
        assert!(enforced.is_empty());
        let mut any = 0;
        for_each_allocation(&inst, ValueRule::Ignored, |_| {
            any += 1;
            ControlFlow::Continue(())
        });
        assert_eq!(any, 2);
    }
}
