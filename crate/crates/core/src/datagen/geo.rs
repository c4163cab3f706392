use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentId, MarketInstance};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
}

/// A forest of stream segments; a segment's parent is the one it flows into.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamTopology {
    pub segments: Vec<Segment>,
}

impl StreamTopology {
    /// Ancestor chain of every segment, itself included. Fails on duplicate
    /// ids, unknown parents and cycles.
    pub fn lineages(&self) -> Result<HashMap<&str, HashSet<&str>>> {
        let mut parent: HashMap<&str, Option<&str>> = HashMap::new();
        let mut problems = Vec::new();
        for s in &self.segments {
            if parent.insert(&s.id, s.parent.as_deref()).is_some() {
                problems.push(format!("duplicate segment id {:?}", s.id));
            }
        }
        for s in &self.segments {
            if let Some(p) = &s.parent {
                if !parent.contains_key(p.as_str()) {
                    problems.push(format!("segment {:?} has unknown parent {p:?}", s.id));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let mut out = HashMap::new();
        for s in &self.segments {
            let mut chain = HashSet::new();
            let mut cur = Some(s.id.as_str());
            while let Some(c) = cur {
                if !chain.insert(c) {
                    return Err(Error::Validation(vec![format!("segment {:?} lies on a cycle", c)]));
                }
                cur = parent[c];
            }
            out.insert(s.id.as_str(), chain);
        }
        Ok(out)
    }
}

/// Keeps the agents of `instance` and links seller `s` to buyer `b` iff
/// their streams are equal or one lies downstream of the other. Agents on
/// different forks are not linked.
pub fn build_geo_compatibility(
    instance: &MarketInstance,
    stream_of: &BTreeMap<AgentId, String>,
    topology: &StreamTopology,
) -> Result<MarketInstance> {
    let lineages = topology.lineages()?;
    let mut problems = Vec::new();
    let mut lookup = |id: &AgentId| match stream_of.get(id) {
        None => {
            problems.push(format!("agent {id} has no stream"));
            None
        }
        Some(s) => match lineages.get_key_value(s.as_str()) {
            None => {
                problems.push(format!("agent {id} is on unknown stream {s:?}"));
                None
            }
            Some((k, chain)) => Some((*k, chain)),
        },
    };
    let sellers: Vec<_> = instance.sellers().iter().map(|a| lookup(&a.id)).collect();
    let buyers: Vec<_> = instance.buyers().iter().map(|a| lookup(&a.id)).collect();
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    let mut edges = Vec::new();
    for (si, s) in sellers.iter().enumerate() {
        let (s_id, s_chain) = s.expect("checked");
        for (bi, b) in buyers.iter().enumerate() {
            let (b_id, b_chain) = b.expect("checked");
            if s_chain.contains(b_id) || b_chain.contains(s_id) {
                edges.push((si, bi));
            }
        }
    }
    instance.with_compat(edges)
}
