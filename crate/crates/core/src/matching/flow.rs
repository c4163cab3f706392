//! Min-cost flow by successive shortest paths with node potentials, plus the
//! excess/deficit transformation for arc lower bounds.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use thiserror::Error;

use super::Cost;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("no flow satisfies the bounds")]
    Infeasible,
    #[error("malformed network: {0}")]
    Malformed(String),
}

/// Residual graph. Edge `e` and its reverse `e ^ 1` are stored adjacently.
#[derive(Clone, Debug)]
pub(crate) struct Residual<C> {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<C>,
    potential: Vec<C>,
}

impl<C: Cost> Residual<C> {
    pub(crate) fn new(nodes: usize) -> Self {
        Residual {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            potential: vec![C::zero(); nodes],
        }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: C) -> usize {
        let id = self.to.len();
        self.adj[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.cost.push(cost.clone());
        self.adj[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        self.cost.push(-cost);
        id
    }

    pub(crate) fn residual_cap(&self, e: usize) -> i64 {
        self.cap[e]
    }

    fn tail(&self, e: usize) -> usize {
        self.to[e ^ 1]
    }

    /// Bellman–Ford from a virtual source joined to every node at cost zero.
    /// Fails if arcs with spare capacity form a negative cycle.
    pub(crate) fn init_potentials(&mut self) -> Result<(), FlowError> {
        let n = self.adj.len();
        let mut dist = vec![C::zero(); n];
        for round in 0..=n {
            let mut changed = false;
            for e in 0..self.to.len() {
                if self.cap[e] <= 0 {
                    continue;
                }
                let (u, v) = (self.tail(e), self.to[e]);
                let cand = dist[u].clone() + self.cost[e].clone();
                if cand < dist[v] {
                    dist[v] = cand;
                    changed = true;
                }
            }
            if !changed {
                self.potential = dist;
                return Ok(());
            }
            if round == n {
                break;
            }
        }
        Err(FlowError::Malformed("negative-cost cycle among arcs with spare capacity".into()))
    }

    /// Dijkstra on reduced costs. Returns the edge ids of a cheapest `s`→`t`
    /// path and its true cost, updating potentials so reduced costs stay
    /// non-negative.
    pub(crate) fn shortest_path(&mut self, s: usize, t: usize) -> Option<(Vec<usize>, C)> {
        let n = self.adj.len();
        let mut dist: Vec<Option<C>> = vec![None; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[s] = Some(C::zero());
        heap.push(Reverse((C::zero(), s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &e in &self.adj[u] {
                if self.cap[e] <= 0 {
                    continue;
                }
                let v = self.to[e];
                if done[v] {
                    continue;
                }
                let reduced = self.cost[e].clone() + self.potential[u].clone() - self.potential[v].clone();
                debug_assert!(!reduced.is_negative(), "negative reduced cost");
                let cand = d.clone() + reduced;
                if dist[v].as_ref().is_none_or(|cur| cand < *cur) {
                    dist[v] = Some(cand.clone());
                    via[v] = Some(e);
                    heap.push(Reverse((cand, v)));
                }
            }
        }
        dist[t].as_ref()?;
        let reach_max = dist.iter().flatten().max().cloned().unwrap_or_else(C::zero);
        for (p, d) in self.potential.iter_mut().zip(&dist) {
            *p = p.clone() + d.clone().unwrap_or_else(|| reach_max.clone());
        }
        let mut path = Vec::new();
        let mut cost = C::zero();
        let mut v = t;
        while v != s {
            let e = via[v].expect("reached nodes have a predecessor edge");
            cost = cost + self.cost[e].clone();
            path.push(e);
            v = self.tail(e);
        }
        path.reverse();
        Some((path, cost))
    }

    pub(crate) fn bottleneck(&self, path: &[usize]) -> i64 {
        path.iter().map(|&e| self.cap[e]).min().unwrap_or(0)
    }

    pub(crate) fn augment(&mut self, path: &[usize], amount: i64) {
        for &e in path {
            self.cap[e] -= amount;
            self.cap[e ^ 1] += amount;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowArc<C> {
    pub from: usize,
    pub to: usize,
    pub lower: i64,
    pub capacity: i64,
    pub cost: C,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork<C> {
    nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<FlowArc<C>>,
}

impl<C: Cost> FlowNetwork<C> {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        FlowNetwork { nodes, source, sink, arcs: Vec::new() }
    }

    pub fn add_arc(&mut self, from: usize, to: usize, lower: i64, capacity: i64, cost: C) -> usize {
        self.arcs.push(FlowArc { from, to, lower, capacity, cost });
        self.arcs.len() - 1
    }

    pub fn arcs(&self) -> &[FlowArc<C>] {
        &self.arcs
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `source sink` header, then one `from to lower capacity cost` line per arc.
    pub fn dump(&self) -> String {
        let mut out = format!("{} {}\n", self.source, self.sink);
        for a in &self.arcs {
            let _ = writeln!(out, "{} {} {} {} {:?}", a.from, a.to, a.lower, a.capacity, a.cost);
        }
        out
    }

    fn check(&self) -> Result<(), FlowError> {
        if self.source >= self.nodes || self.sink >= self.nodes || self.source == self.sink {
            return Err(FlowError::Malformed("source/sink out of range or equal".into()));
        }
        for (i, a) in self.arcs.iter().enumerate() {
            if a.from >= self.nodes || a.to >= self.nodes {
                return Err(FlowError::Malformed(format!("arc {i} references a missing node")));
            }
            if a.lower < 0 {
                return Err(FlowError::Malformed(format!("arc {i} has a negative lower bound")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSolution<C> {
    /// Flow on each arc, in insertion order.
    pub flows: Vec<i64>,
    pub cost: C,
}

/// Cheapest integral source→sink flow of exactly `flow_value` units that
/// respects every arc's `[lower, capacity]` interval.
///
/// Lower bounds are removed by the excess/deficit construction and the
/// resulting transshipment problem is solved between a super source and
/// super sink. The network must not contain a negative-cost cycle of arcs
/// with spare capacity.
pub fn min_cost_flow_with_lower_bounds<C: Cost>(
    net: &FlowNetwork<C>,
    flow_value: i64,
) -> Result<FlowSolution<C>, FlowError> {
    net.check()?;
    if flow_value < 0 {
        return Err(FlowError::Malformed("negative flow value".into()));
    }
    if net.arcs.iter().any(|a| a.lower > a.capacity) {
        return Err(FlowError::Infeasible);
    }
    let n = net.nodes;
    let (super_source, super_sink) = (n, n + 1);
    let mut res = Residual::new(n + 2);
    let mut excess = vec![0i64; n];
    let mut edge_of = Vec::with_capacity(net.arcs.len());
    for a in &net.arcs {
        let spare = a.capacity - a.lower;
        edge_of.push((spare > 0).then(|| res.add_edge(a.from, a.to, spare, a.cost.clone())));
        excess[a.to] += a.lower;
        excess[a.from] -= a.lower;
    }
    // the required value behaves like a sink→source arc with lower = upper
    excess[net.source] += flow_value;
    excess[net.sink] -= flow_value;

    let mut demand = 0;
    for (v, &x) in excess.iter().enumerate() {
        if x > 0 {
            res.add_edge(super_source, v, x, C::zero());
            demand += x;
        } else if x < 0 {
            res.add_edge(v, super_sink, -x, C::zero());
        }
    }

    res.init_potentials()?;
    let mut sent = 0;
    while sent < demand {
        let Some((path, _)) = res.shortest_path(super_source, super_sink) else {
            return Err(FlowError::Infeasible);
        };
        let amount = res.bottleneck(&path).min(demand - sent);
        res.augment(&path, amount);
        sent += amount;
    }

    let flows: Vec<i64> = net
        .arcs
        .iter()
        .zip(&edge_of)
        .map(|(a, e)| match e {
            Some(e) => a.capacity - res.residual_cap(*e),
            None => a.lower,
        })
        .collect();
    let cost = net
        .arcs
        .iter()
        .zip(&flows)
        .fold(C::zero(), |acc, (a, &f)| acc + a.cost.times(f));
    Ok(FlowSolution { flows, cost })
}
