//! Market instances, trading assignments and the unit-level
//! resources–needs graph.
//!
//! Agents own an ordered list of water units. Unit `x` of an agent must be
//! traded before unit `x + 1`. Internally units are 0-based; every external
//! format (JSON, CSV, messages) is 1-based.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::WeightedBipartiteGraph;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub String);

impl AgentId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        AgentId(s.to_owned())
    }
}

impl From<String> for AgentId {
    fn from(s: String) -> Self {
        AgentId(s)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A water-rights holder with its units in trading order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agent {
    pub id: AgentId,
    /// Higher is more senior. Solvers ignore it.
    pub seniority_rank: u32,
    pub units: Vec<Value>,
}

impl Agent {
    pub fn new(id: impl Into<AgentId>, seniority_rank: u32, units: Vec<Value>) -> Self {
        Agent { id: id.into(), seniority_rank, units }
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Seller,
    Buyer,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Seller => "seller",
            Side::Buyer => "buyer",
        })
    }
}

/// Zero-based handle to one unit of one agent on a given side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitRef {
    pub agent: usize,
    pub unit: usize,
}

impl UnitRef {
    pub const fn new(agent: usize, unit: usize) -> Self {
        UnitRef { agent, unit }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketInstance {
    sellers: Vec<Agent>,
    buyers: Vec<Agent>,
    compat: BTreeSet<(usize, usize)>,
}

impl MarketInstance {
    /// Validates and builds an instance from agent lists and id-level
    /// compatibility edges `(seller id, buyer id)`. Duplicate edges collapse.
    pub fn new(
        sellers: Vec<Agent>,
        buyers: Vec<Agent>,
        edges: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self> {
        let mut problems = validate_agents(&sellers, &buyers);
        let seller_ix: HashMap<&AgentId, usize> =
            sellers.iter().enumerate().map(|(i, a)| (&a.id, i)).collect();
        let buyer_ix: HashMap<&AgentId, usize> =
            buyers.iter().enumerate().map(|(i, a)| (&a.id, i)).collect();
        let mut compat = BTreeSet::new();
        for (s, b) in edges {
            match (seller_ix.get(&s), buyer_ix.get(&b)) {
                (Some(&si), Some(&bi)) => {
                    compat.insert((si, bi));
                }
                _ => problems.push(format!("compatibility edge ({s}, {b}) references unknown seller or buyer")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(MarketInstance { sellers, buyers, compat })
    }

    /// Builds an instance from index-level compatibility pairs.
    pub fn from_indices(
        sellers: Vec<Agent>,
        buyers: Vec<Agent>,
        compat: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut problems = validate_agents(&sellers, &buyers);
        let mut set = BTreeSet::new();
        for (s, b) in compat {
            if s >= sellers.len() || b >= buyers.len() {
                problems.push(format!("compatibility edge ({s}, {b}) is out of range"));
            } else {
                set.insert((s, b));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(MarketInstance { sellers, buyers, compat: set })
    }

    /// Same agents, complete seller–buyer compatibility.
    pub fn complete(sellers: Vec<Agent>, buyers: Vec<Agent>) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = (0..sellers.len())
            .flat_map(|s| (0..buyers.len()).map(move |b| (s, b)))
            .collect();
        Self::from_indices(sellers, buyers, pairs)
    }

    pub fn with_compat(&self, compat: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_indices(self.sellers.clone(), self.buyers.clone(), compat)
    }

    pub fn sellers(&self) -> &[Agent] {
        &self.sellers
    }

    pub fn buyers(&self) -> &[Agent] {
        &self.buyers
    }

    pub fn agent(&self, side: Side, index: usize) -> Option<&Agent> {
        match side {
            Side::Seller => self.sellers.get(index),
            Side::Buyer => self.buyers.get(index),
        }
    }

    pub fn compat_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.compat.iter().copied()
    }

    pub fn compat_len(&self) -> usize {
        self.compat.len()
    }

    pub fn is_compatible(&self, seller: usize, buyer: usize) -> bool {
        self.compat.contains(&(seller, buyer))
    }

    /// Buyers compatible with `seller`, ascending.
    pub fn buyers_of(&self, seller: usize) -> impl Iterator<Item = usize> + '_ {
        self.compat.range((seller, 0)..(seller + 1, 0)).map(|&(_, b)| b)
    }

    pub fn seller_index(&self, id: &AgentId) -> Option<usize> {
        self.sellers.iter().position(|a| &a.id == id)
    }

    pub fn buyer_index(&self, id: &AgentId) -> Option<usize> {
        self.buyers.iter().position(|a| &a.id == id)
    }

    pub fn value(&self, side: Side, unit: UnitRef) -> Option<Value> {
        self.agent(side, unit.agent).and_then(|a| a.units.get(unit.unit)).copied()
    }

    pub fn seller_units(&self) -> usize {
        self.sellers.iter().map(Agent::unit_count).sum()
    }

    pub fn buyer_units(&self) -> usize {
        self.buyers.iter().map(Agent::unit_count).sum()
    }

    pub fn total_units(&self) -> usize {
        self.seller_units() + self.buyer_units()
    }

    /// Pre-trade total value: every seller unit valued by its owner.
    pub fn sigma0(&self) -> Value {
        self.sellers.iter().flat_map(|a| a.units.iter()).sum()
    }

    /// Offending agents for the tractable regime: seller lists must be
    /// non-decreasing and buyer lists non-increasing.
    pub fn monotonicity_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.sellers {
            if a.units.windows(2).any(|w| w[1] < w[0]) {
                out.push(format!("seller {} values are not non-decreasing", a.id));
            }
        }
        for a in &self.buyers {
            if a.units.windows(2).any(|w| w[1] > w[0]) {
                out.push(format!("buyer {} values are not non-increasing", a.id));
            }
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.monotonicity_violations().is_empty()
    }
}

fn validate_agents(sellers: &[Agent], buyers: &[Agent]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (side, agents) in [(Side::Seller, sellers), (Side::Buyer, buyers)] {
        for a in agents {
            if !seen.insert(&a.id) {
                problems.push(format!("duplicate agent id {}", a.id));
            }
            if a.units.is_empty() {
                problems.push(format!("{side} {} has no units", a.id));
            }
            if let Some(pos) = a.units.iter().position(|v| v.is_negative()) {
                problems.push(format!("{side} {} unit {} has negative value", a.id, pos + 1));
            }
        }
    }
    problems
}

/// One seller-unit / buyer-unit trade.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub seller: UnitRef,
    pub buyer: UnitRef,
}

impl Pair {
    pub const fn new(seller: UnitRef, buyer: UnitRef) -> Self {
        Pair { seller, buyer }
    }
}

/// A set of unit trades. Validity is checked separately by
/// [`validate_assignment`]; construction never rejects pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TradingAssignment {
    pairs: BTreeSet<Pair>,
}

impl TradingAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair: Pair) -> bool {
        self.pairs.insert(pair)
    }

    pub fn remove(&mut self, pair: &Pair) -> bool {
        self.pairs.remove(pair)
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &Pair> + '_ {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Matched seller units, in order.
    pub fn matched_seller_units(&self) -> BTreeSet<UnitRef> {
        self.pairs.iter().map(|p| p.seller).collect()
    }

    /// Number of units received by each buyer (η_b).
    pub fn buyer_counts(&self, instance: &MarketInstance) -> Vec<usize> {
        let mut counts = vec![0; instance.buyers().len()];
        for p in &self.pairs {
            if let Some(c) = counts.get_mut(p.buyer.agent) {
                *c += 1;
            }
        }
        counts
    }
}

impl FromIterator<Pair> for TradingAssignment {
    fn from_iter<I: IntoIterator<Item = Pair>>(iter: I) -> Self {
        TradingAssignment { pairs: iter.into_iter().collect() }
    }
}

fn pair_values(instance: &MarketInstance, pair: &Pair) -> Result<(Value, Value)> {
    let fs = instance.value(Side::Seller, pair.seller).ok_or_else(|| {
        Error::UnknownUnit(format!("seller {} unit {}", pair.seller.agent, pair.seller.unit + 1))
    })?;
    let fb = instance.value(Side::Buyer, pair.buyer).ok_or_else(|| {
        Error::UnknownUnit(format!("buyer {} unit {}", pair.buyer.agent, pair.buyer.unit + 1))
    })?;
    Ok((fs, fb))
}

/// Σ (buyer value − seller value) over the pairs.
pub fn welfare(assignment: &TradingAssignment, instance: &MarketInstance) -> Result<Value> {
    assignment.pairs().try_fold(Value::ZERO, |acc, p| {
        let (fs, fb) = pair_values(instance, p)?;
        Ok(acc + (fb - fs))
    })
}

/// σ0 + welfare.
pub fn total_value(assignment: &TradingAssignment, instance: &MarketInstance) -> Result<Value> {
    Ok(instance.sigma0() + welfare(assignment, instance)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    UnknownUnit { side: Side, unit: UnitRef },
    /// A unit appears in more than one pair.
    UnitReused { side: Side, agent: AgentId, unit: usize },
    Incompatible { seller: AgentId, buyer: AgentId },
    /// Buyer values the unit below the seller.
    ValueOrder { pair: Pair, seller_value: Value, buyer_value: Value },
    /// `unit` is matched but `unit - 1` is not.
    Prefix { side: Side, agent: AgentId, unit: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownUnit { side, unit } => {
                write!(f, "unknown {side} unit (agent #{}, unit {})", unit.agent, unit.unit + 1)
            }
            Violation::UnitReused { side, agent, unit } => {
                write!(f, "matching: {side} {agent} unit {} used more than once", unit + 1)
            }
            Violation::Incompatible { seller, buyer } => {
                write!(f, "compatibility: seller {seller} and buyer {buyer} are not compatible")
            }
            Violation::ValueOrder { pair, seller_value, buyer_value } => write!(
                f,
                "value: buyer unit {} worth {buyer_value} < seller unit {} worth {seller_value}",
                pair.buyer.unit + 1,
                pair.seller.unit + 1
            ),
            Violation::Prefix { side, agent, unit } => write!(
                f,
                "prefix: {side} {agent} unit {} matched while unit {} is not",
                unit + 1,
                unit
            ),
        }
    }
}

/// Checks the four validity conditions of a trading assignment: matching,
/// compatibility, value order and per-agent prefix order. Empty iff valid.
pub fn validate_assignment(assignment: &TradingAssignment, instance: &MarketInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seller_used: BTreeSet<UnitRef> = BTreeSet::new();
    let mut buyer_used: BTreeSet<UnitRef> = BTreeSet::new();
    let mut reported_reuse: HashSet<(bool, UnitRef)> = HashSet::new();

    for p in assignment.pairs() {
        let fs = instance.value(Side::Seller, p.seller);
        let fb = instance.value(Side::Buyer, p.buyer);
        if fs.is_none() {
            out.push(Violation::UnknownUnit { side: Side::Seller, unit: p.seller });
        }
        if fb.is_none() {
            out.push(Violation::UnknownUnit { side: Side::Buyer, unit: p.buyer });
        }
        let (Some(fs), Some(fb)) = (fs, fb) else { continue };
        let seller = &instance.sellers()[p.seller.agent];
        let buyer = &instance.buyers()[p.buyer.agent];
        if !seller_used.insert(p.seller) && reported_reuse.insert((true, p.seller)) {
            out.push(Violation::UnitReused { side: Side::Seller, agent: seller.id.clone(), unit: p.seller.unit });
        }
        if !buyer_used.insert(p.buyer) && reported_reuse.insert((false, p.buyer)) {
            out.push(Violation::UnitReused { side: Side::Buyer, agent: buyer.id.clone(), unit: p.buyer.unit });
        }
        if !instance.is_compatible(p.seller.agent, p.buyer.agent) {
            out.push(Violation::Incompatible { seller: seller.id.clone(), buyer: buyer.id.clone() });
        }
        if fb < fs {
            out.push(Violation::ValueOrder { pair: *p, seller_value: fs, buyer_value: fb });
        }
    }

    for (side, used, agents) in [
        (Side::Seller, &seller_used, instance.sellers()),
        (Side::Buyer, &buyer_used, instance.buyers()),
    ] {
        for u in used.iter() {
            if u.unit > 0 && !used.contains(&UnitRef::new(u.agent, u.unit - 1)) {
                out.push(Violation::Prefix { side, agent: agents[u.agent].id.clone(), unit: u.unit });
            }
        }
    }
    out
}

/// Per-buyer fraction of demanded units received, η_b / γ_b.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatisfactionVector(pub Vec<Ratio<u64>>);

impl SatisfactionVector {
    pub fn from_counts(received: &[usize], demanded: &[usize]) -> Self {
        debug_assert_eq!(received.len(), demanded.len());
        SatisfactionVector(
            received
                .iter()
                .zip(demanded)
                .map(|(&r, &d)| Ratio::new(r.min(d) as u64, d.max(1) as u64))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|r| *r.numer() as f64 / *r.denom() as f64).collect()
    }
}

pub fn satisfaction_vector(assignment: &TradingAssignment, instance: &MarketInstance) -> SatisfactionVector {
    let demanded: Vec<usize> = instance.buyers().iter().map(Agent::unit_count).collect();
    SatisfactionVector::from_counts(&assignment.buyer_counts(instance), &demanded)
}

/// One edge of the resources–needs graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RnEdge {
    pub seller: UnitRef,
    pub buyer: UnitRef,
    /// Value gap f_b − f_s, never negative.
    pub weight: Value,
}

/// Unit-level bipartite graph: seller units on the left, buyer units on the
/// right, an edge wherever the agents are compatible and the buyer values its
/// unit at least as much as the seller values theirs.
#[derive(Clone, Debug)]
pub struct ResourcesNeedsGraph {
    seller_offsets: Vec<usize>,
    buyer_offsets: Vec<usize>,
    seller_nodes: Vec<UnitRef>,
    buyer_nodes: Vec<UnitRef>,
    edges: Vec<RnEdge>,
    lookup: HashMap<(usize, usize), usize>,
}

pub fn build_resources_needs_graph(instance: &MarketInstance) -> ResourcesNeedsGraph {
    let (seller_offsets, seller_nodes) = unit_nodes(instance.sellers());
    let (buyer_offsets, buyer_nodes) = unit_nodes(instance.buyers());
    let mut edges = Vec::new();
    let mut lookup = HashMap::new();
    for (s, seller) in instance.sellers().iter().enumerate() {
        for (i, &fs) in seller.units.iter().enumerate() {
            for b in instance.buyers_of(s) {
                for (j, &fb) in instance.buyers()[b].units.iter().enumerate() {
                    if fb >= fs {
                        lookup.insert((seller_offsets[s] + i, buyer_offsets[b] + j), edges.len());
                        edges.push(RnEdge {
                            seller: UnitRef::new(s, i),
                            buyer: UnitRef::new(b, j),
                            weight: fb - fs,
                        });
                    }
                }
            }
        }
    }
    ResourcesNeedsGraph { seller_offsets, buyer_offsets, seller_nodes, buyer_nodes, edges, lookup }
}

fn unit_nodes(agents: &[Agent]) -> (Vec<usize>, Vec<UnitRef>) {
    let mut offsets = Vec::with_capacity(agents.len());
    let mut nodes = Vec::new();
    for (a, agent) in agents.iter().enumerate() {
        offsets.push(nodes.len());
        nodes.extend((0..agent.unit_count()).map(|u| UnitRef::new(a, u)));
    }
    (offsets, nodes)
}

impl ResourcesNeedsGraph {
    pub fn seller_nodes(&self) -> &[UnitRef] {
        &self.seller_nodes
    }

    pub fn buyer_nodes(&self) -> &[UnitRef] {
        &self.buyer_nodes
    }

    pub fn edges(&self) -> &[RnEdge] {
        &self.edges
    }

    pub fn seller_node(&self, unit: UnitRef) -> usize {
        self.seller_offsets[unit.agent] + unit.unit
    }

    pub fn buyer_node(&self, unit: UnitRef) -> usize {
        self.buyer_offsets[unit.agent] + unit.unit
    }

    /// Left/right node indices of edge `e`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let edge = &self.edges[e];
        (self.seller_node(edge.seller), self.buyer_node(edge.buyer))
    }

    pub fn edge_between(&self, seller: UnitRef, buyer: UnitRef) -> Option<usize> {
        if seller.agent >= self.seller_offsets.len() || buyer.agent >= self.buyer_offsets.len() {
            return None;
        }
        self.lookup.get(&(self.seller_node(seller), self.buyer_node(buyer))).copied()
    }

    /// Edge weights in micro-units, as a matching kernel input.
    pub fn to_bipartite(&self) -> WeightedBipartiteGraph<i64> {
        let edges = self
            .edges
            .iter()
            .map(|e| (self.seller_node(e.seller), self.buyer_node(e.buyer), e.weight.micros()))
            .collect();
        WeightedBipartiteGraph::new(self.seller_nodes.len(), self.buyer_nodes.len(), edges)
            .expect("resources-needs graph edges are unique and non-negative")
    }

    pub fn assignment_from_edges(&self, edges: impl IntoIterator<Item = usize>) -> TradingAssignment {
        edges.into_iter().map(|e| Pair::new(self.edges[e].seller, self.edges[e].buyer)).collect()
    }

    /// Plain-text dump, one `seller:unit buyer:unit weight` line per edge.
    pub fn dump(&self, instance: &MarketInstance) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!(
                "{}:{} {}:{} {}\n",
                instance.sellers()[e.seller.agent].id,
                e.seller.unit + 1,
                instance.buyers()[e.buyer.agent].id,
                e.buyer.unit + 1,
                e.weight
            ));
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn v(x: i64) -> Value {
        Value::from_int(x)
    }

    pub(crate) fn agent(id: &str, units: &[i64]) -> Agent {
        Agent::new(id, 1, units.iter().map(|&x| v(x)).collect())
    }

    /// Seller [1,2], buyer [3,2], compatible.
    pub(crate) fn small_instance() -> MarketInstance {
        MarketInstance::complete(vec![agent("s", &[1, 2])], vec![agent("b", &[3, 2])]).unwrap()
    }

    #[test]
    fn resources_needs_graph_small_example() {
        let inst = small_instance();
        let g = build_resources_needs_graph(&inst);
        let got: Vec<(usize, usize, Value)> =
            g.edges().iter().map(|e| (e.seller.unit, e.buyer.unit, e.weight)).collect();
        assert_eq!(got, vec![(0, 0, v(2)), (0, 1, v(1)), (1, 0, v(1)), (1, 1, v(0))]);
    }

    #[test]
    fn no_compatibility_means_no_edges() {
        let inst =
            MarketInstance::from_indices(vec![agent("s", &[1, 2])], vec![agent("b", &[3, 2])], []).unwrap();
        let g = build_resources_needs_graph(&inst);
        assert_eq!(g.seller_nodes().len(), 2);
        assert_eq!(g.buyer_nodes().len(), 2);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn value_filter_drops_unprofitable_pairs() {
        let inst = MarketInstance::complete(vec![agent("s", &[5])], vec![agent("b", &[3])]).unwrap();
        assert!(build_resources_needs_graph(&inst).edges().is_empty());
    }

    #[test]
    fn dangling_edge_is_reported() {
        let err = MarketInstance::new(
            vec![agent("s", &[1])],
            vec![agent("b", &[2])],
            [(AgentId::from("s"), AgentId::from("nobody")), (AgentId::from("ghost"), AgentId::from("b"))],
        )
        .unwrap_err();
        match err {
            Error::Validation(list) => assert_eq!(list.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_unit_agents_are_rejected() {
        assert!(MarketInstance::complete(vec![agent("s", &[])], vec![]).is_err());
    }

    #[test]
    fn welfare_and_total_value() {
        let inst = small_instance();
        let empty = TradingAssignment::new();
        assert_eq!(welfare(&empty, &inst).unwrap(), Value::ZERO);
        assert_eq!(total_value(&empty, &inst).unwrap(), v(3));

        let best: TradingAssignment = [
            Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0)),
            Pair::new(UnitRef::new(0, 1), UnitRef::new(0, 1)),
        ]
        .into_iter()
        .collect();
        assert_eq!(welfare(&best, &inst).unwrap(), v(2));
        assert_eq!(total_value(&best, &inst).unwrap(), v(5));

        let single = MarketInstance::complete(vec![agent("s", &[2])], vec![agent("b", &[5])]).unwrap();
        let one: TradingAssignment =
            [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0))].into_iter().collect();
        assert_eq!(welfare(&one, &single).unwrap(), v(3));

        let bogus: TradingAssignment =
            [Pair::new(UnitRef::new(0, 7), UnitRef::new(0, 0))].into_iter().collect();
        assert!(matches!(welfare(&bogus, &inst), Err(Error::UnknownUnit(_))));
    }

    #[test]
    fn total_value_without_sellers_is_welfare() {
        let inst = MarketInstance::complete(vec![], vec![agent("b", &[4])]).unwrap();
        assert_eq!(total_value(&TradingAssignment::new(), &inst).unwrap(), Value::ZERO);
    }

    #[test]
    fn prefix_violation_detected() {
        let inst = MarketInstance::complete(vec![agent("s", &[1])], vec![agent("b", &[4, 3])]).unwrap();
        let a: TradingAssignment = [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 1))].into_iter().collect();
        let vs = validate_assignment(&a, &inst);
        assert_eq!(vs.len(), 1);
        assert!(matches!(&vs[0], Violation::Prefix { side: Side::Buyer, unit: 1, .. }));
    }

    #[test]
    fn value_violation_detected() {
        let inst = MarketInstance::complete(vec![agent("s", &[5])], vec![agent("b", &[3])]).unwrap();
        let a: TradingAssignment = [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0))].into_iter().collect();
        let vs = validate_assignment(&a, &inst);
        assert_eq!(vs.len(), 1);
        assert!(matches!(vs[0], Violation::ValueOrder { .. }));
    }

    #[test]
    fn reuse_and_incompatibility_detected() {
        let inst = MarketInstance::from_indices(
            vec![agent("s", &[1]), agent("t", &[1])],
            vec![agent("b", &[3, 3])],
            [(0, 0)],
        )
        .unwrap();
        let a: TradingAssignment = [
            Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0)),
            Pair::new(UnitRef::new(1, 0), UnitRef::new(0, 0)),
        ]
        .into_iter()
        .collect();
        let vs = validate_assignment(&a, &inst);
        assert!(vs.iter().any(|v| matches!(v, Violation::UnitReused { side: Side::Buyer, .. })));
        assert!(vs.iter().any(|v| matches!(v, Violation::Incompatible { .. })));
    }

    #[test]
    fn satisfaction_examples() {
        let inst = MarketInstance::complete(vec![agent("s", &[1, 1])], vec![agent("b", &[3, 3])]).unwrap();
        let none = satisfaction_vector(&TradingAssignment::new(), &inst);
        assert_eq!(none.to_f64(), vec![0.0]);
        let half: TradingAssignment = [Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0))].into_iter().collect();
        assert_eq!(satisfaction_vector(&half, &inst).to_f64(), vec![0.5]);
        let full: TradingAssignment = [
            Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0)),
            Pair::new(UnitRef::new(0, 1), UnitRef::new(0, 1)),
        ]
        .into_iter()
        .collect();
        assert_eq!(satisfaction_vector(&full, &inst).to_f64(), vec![1.0]);
    }

    #[test]
    fn monotonicity_flag() {
        assert!(small_instance().is_monotone());
        let bad = MarketInstance::complete(vec![agent("s", &[2, 1])], vec![agent("b", &[1, 3])]).unwrap();
        assert_eq!(bad.monotonicity_violations().len(), 2);
    }

    fn arb_instance() -> impl Strategy<Value = MarketInstance> {
        let agents = |prefix: &'static str| {
            prop::collection::vec(prop::collection::vec(0i64..20, 1..4), 0..4).prop_map(move |lists| {
                lists
                    .into_iter()
                    .enumerate()
                    .map(|(i, u)| agent(&format!("{prefix}{i}"), &u))
                    .collect::<Vec<_>>()
            })
        };
        (agents("s"), agents("b"), prop::collection::vec((0usize..4, 0usize..4), 0..10)).prop_map(
            |(s, b, e)| {
                let (ns, nb) = (s.len(), b.len());
                let edges: Vec<_> = e.into_iter().filter(|&(x, y)| x < ns && y < nb).collect();
                MarketInstance::from_indices(s, b, edges).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn edge_weights_are_exact_value_gaps(inst in arb_instance()) {
            let g = build_resources_needs_graph(&inst);
            for e in g.edges() {
                let fs = inst.value(Side::Seller, e.seller).unwrap();
                let fb = inst.value(Side::Buyer, e.buyer).unwrap();
                prop_assert!(e.weight >= Value::ZERO);
                prop_assert_eq!(e.weight, fb - fs);
                prop_assert!(inst.is_compatible(e.seller.agent, e.buyer.agent));
            }
            // and every qualifying pair is present
            let mut expected = 0;
            for (s, b) in inst.compat_edges() {
                for fs in &inst.sellers()[s].units {
                    expected += inst.buyers()[b].units.iter().filter(|fb| *fb >= fs).count();
                }
            }
            prop_assert_eq!(g.edges().len(), expected);
        }

        #[test]
        fn total_value_minus_welfare_is_sigma0(inst in arb_instance(), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..6)) {
            let g = build_resources_needs_graph(&inst);
            prop_assume!(!g.edges().is_empty());
            let chosen: Vec<usize> = picks.iter().map(|ix| ix.index(g.edges().len())).collect();
            let a = g.assignment_from_edges(chosen.iter().copied());
            let w = welfare(&a, &inst).unwrap();
            prop_assert_eq!(total_value(&a, &inst).unwrap() - w, inst.sigma0());
            // additivity over a split of the pair set
            let (left, right): (Vec<Pair>, Vec<Pair>) = a.pairs().copied().partition(|p| p.seller.unit % 2 == 0);
            let wl = welfare(&left.into_iter().collect(), &inst).unwrap();
            let wr = welfare(&right.into_iter().collect(), &inst).unwrap();
            prop_assert_eq!(wl + wr, w);
        }
    }
}
