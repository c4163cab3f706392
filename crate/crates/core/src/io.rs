//! JSON interchange formats. Agents are referred to by id; unit indices in
//! files are 1-based.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datagen::StreamTopology;
use crate::error::{Error, Result};
use crate::fairness::FairnessSpec;
use crate::leximin::{LeximinBuyer, LeximinInstance, LeximinSolution};
use crate::model::{total_value, welfare, Agent, AgentId, MarketInstance, Pair, TradingAssignment, UnitRef};
use crate::reductions::{VcInstance, X3cInstance};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentJson {
    pub id: AgentId,
    pub rank: u32,
    pub units: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub sellers: Vec<AgentJson>,
    pub buyers: Vec<AgentJson>,
    pub edges: Vec<(AgentId, AgentId)>,
}

impl From<&MarketInstance> for InstanceJson {
    fn from(inst: &MarketInstance) -> Self {
        let agents = |list: &[Agent]| {
            list.iter().map(|a| AgentJson { id: a.id.clone(), rank: a.seniority_rank, units: a.units.clone() }).collect()
        };
        InstanceJson {
            sellers: agents(inst.sellers()),
            buyers: agents(inst.buyers()),
            edges: inst
                .compat_edges()
                .map(|(s, b)| (inst.sellers()[s].id.clone(), inst.buyers()[b].id.clone()))
                .collect(),
        }
    }
}

impl TryFrom<InstanceJson> for MarketInstance {
    type Error = Error;

    fn try_from(j: InstanceJson) -> Result<Self> {
        let agents = |list: Vec<AgentJson>| list.into_iter().map(|a| Agent::new(a.id, a.rank, a.units)).collect();
        MarketInstance::new(agents(j.sellers), agents(j.buyers), j.edges)
    }
}

pub fn parse_instance(text: &str) -> Result<MarketInstance> {
    serde_json::from_str::<InstanceJson>(text)?.try_into()
}

pub fn instance_to_json(inst: &MarketInstance) -> String {
    serde_json::to_string_pretty(&InstanceJson::from(inst)).expect("instance serializes")
}

/// `pairs` entries are `[seller id, seller unit, buyer id, buyer unit]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub pairs: Vec<(AgentId, usize, AgentId, usize)>,
    pub welfare: Value,
    pub total_value: Value,
    pub sigma0: Value,
}

pub fn solution_json(assignment: &TradingAssignment, inst: &MarketInstance) -> Result<SolutionJson> {
    let pairs = assignment
        .pairs()
        .map(|p| {
            (
                inst.sellers()[p.seller.agent].id.clone(),
                p.seller.unit + 1,
                inst.buyers()[p.buyer.agent].id.clone(),
                p.buyer.unit + 1,
            )
        })
        .collect();
    Ok(SolutionJson {
        pairs,
        welfare: welfare(assignment, inst)?,
        total_value: total_value(assignment, inst)?,
        sigma0: inst.sigma0(),
    })
}

/// Resolves the pairs of a solution file against `inst`. The stored totals
/// are not trusted; recompute them from the assignment.
pub fn parse_solution(text: &str, inst: &MarketInstance) -> Result<TradingAssignment> {
    let j: SolutionJson = serde_json::from_str(text)?;
    let mut out = TradingAssignment::new();
    let mut problems = Vec::new();
    for (n, (s, i, b, jj)) in j.pairs.iter().enumerate() {
        match (inst.seller_index(s), inst.buyer_index(b)) {
            (Some(si), Some(bi)) if *i >= 1 && *jj >= 1 => {
                out.insert(Pair::new(UnitRef::new(si, i - 1), UnitRef::new(bi, jj - 1)));
            }
            _ => problems.push(format!("pair {}: [{s}, {i}, {b}, {jj}] does not name a seller and buyer unit", n + 1)),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::Validation(problems))
    }
}

pub fn parse_fairness_spec(text: &str) -> Result<FairnessSpec> {
    Ok(serde_json::from_str(text)?)
}

/// `edges` entries are `[unit, buyer id]` with units numbered from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeximinJson {
    pub k: usize,
    pub buyers: Vec<LeximinBuyer>,
    pub edges: Vec<(usize, AgentId)>,
}

impl From<&LeximinInstance> for LeximinJson {
    fn from(inst: &LeximinInstance) -> Self {
        LeximinJson {
            k: inst.k(),
            buyers: inst.buyers().to_vec(),
            edges: inst.edges().map(|(u, b)| (u + 1, inst.buyers()[b].id.clone())).collect(),
        }
    }
}

impl TryFrom<LeximinJson> for LeximinInstance {
    type Error = Error;

    fn try_from(j: LeximinJson) -> Result<Self> {
        if let Some((u, _)) = j.edges.iter().find(|(u, _)| *u == 0) {
            return Err(Error::Validation(vec![format!("unit index {u} in edges; units are numbered from 1")]));
        }
        let edges: Vec<(usize, AgentId)> = j.edges.into_iter().map(|(u, b)| (u - 1, b)).collect();
        LeximinInstance::with_ids(j.k, j.buyers, &edges)
    }
}

pub fn parse_leximin(text: &str) -> Result<LeximinInstance> {
    serde_json::from_str::<LeximinJson>(text)?.try_into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeximinSolutionJson {
    /// `[unit, buyer id]`, units numbered from 1.
    pub pairs: Vec<(usize, AgentId)>,
    pub counts: BTreeMap<AgentId, usize>,
    /// Exact fractions as `"num/den"`.
    pub satisfaction: Vec<String>,
    pub min_satisfaction: f64,
}

pub fn leximin_solution_json(inst: &LeximinInstance, sol: &LeximinSolution) -> LeximinSolutionJson {
    let ids: Vec<&AgentId> = inst.buyers().iter().map(|b| &b.id).collect();
    LeximinSolutionJson {
        pairs: sol.pairs().into_iter().map(|(u, b)| (u + 1, ids[b].clone())).collect(),
        counts: ids.iter().zip(&sol.counts).map(|(id, &c)| ((*id).clone(), c)).collect(),
        satisfaction: sol.satisfaction.0.iter().map(|r| format!("{}/{}", r.numer(), r.denom())).collect(),
        min_satisfaction: sol.satisfaction.to_f64().into_iter().fold(f64::INFINITY, f64::min).min(1.0),
    }
}

pub fn parse_x3c(text: &str) -> Result<X3cInstance> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_vc(text: &str) -> Result<VcInstance> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_topology(text: &str) -> Result<StreamTopology> {
    let t: StreamTopology = serde_json::from_str(text)?;
    t.lineages()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{agent, small_instance};
    use proptest::prelude::*;

    const FIXTURE: &str = r#"{
        "sellers": [{"id": "s", "rank": 2, "units": ["1", "2"]}],
        "buyers": [{"id": "b", "rank": 1, "units": ["3", "2"]}],
        "edges": [["s", "b"]]
    }"#;

    #[test]
    fn instance_round_trip() {
        let inst = parse_instance(FIXTURE).unwrap();
        assert_eq!(inst.sellers()[0].units, vec![Value::from_int(1), Value::from_int(2)]);
        assert_eq!(inst.sellers()[0].seniority_rank, 2);
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn instance_errors() {
        assert!(matches!(parse_instance("{"), Err(Error::Json(_))));
        let unknown = FIXTURE.replace(r#"["s", "b"]"#, r#"["s", "zz"]"#);
        assert!(matches!(parse_instance(&unknown), Err(Error::Validation(_))));
        let numeric = FIXTURE.replace(r#""1", "2""#, "1, 2");
        assert!(parse_instance(&numeric).is_err());
    }

    #[test]
    fn solution_round_trip() {
        let inst = parse_instance(FIXTURE).unwrap();
        let mut a = TradingAssignment::new();
        a.insert(Pair::new(UnitRef::new(0, 0), UnitRef::new(0, 0)));
        let j = solution_json(&a, &inst).unwrap();
        assert_eq!(j.welfare, Value::from_int(2));
        assert_eq!(j.sigma0, Value::from_int(3));
        assert_eq!(j.total_value, Value::from_int(5));
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(text, r#"{"pairs":[["s",1,"b",1]],"welfare":"2","total_value":"5","sigma0":"3"}"#);
        assert_eq!(parse_solution(&text, &inst).unwrap(), a);
        let bad = text.replace(r#""s",1"#, r#""s",0"#);
        assert!(parse_solution(&bad, &inst).is_err());
    }

    #[test]
    fn leximin_round_trip() {
        let text = r#"{"k":2,"buyers":[{"id":"x","gamma":2},{"id":"y","gamma":1}],"edges":[[1,"x"],[2,"y"]]}"#;
        let inst = parse_leximin(text).unwrap();
        assert!(inst.is_compatible(0, 0) && inst.is_compatible(1, 1));
        assert_eq!(serde_json::to_string(&LeximinJson::from(&inst)).unwrap(), text);
        assert!(parse_leximin(&text.replace("[1,", "[0,")).is_err());
        assert!(parse_leximin(&text.replace("[2,", "[3,")).is_err());
    }

    #[test]
    fn other_formats() {
        assert_eq!(parse_fairness_spec(r#"{"groups":[{"buyers":["b"],"r":1}]}"#).unwrap().groups[0].r, 1);
        assert_eq!(parse_x3c(r#"{"t":3,"sets":[[1,2,3]]}"#).unwrap().t(), 3);
        assert_eq!(parse_vc(r#"{"n":2,"edges":[[1,2]],"k":1}"#).unwrap().k(), 1);
        assert!(parse_topology(r#"{"segments":[{"id":"a","parent":"a"}]}"#).is_err());
        assert!(parse_topology(r#"{"segments":[{"id":"a","parent":null}]}"#).is_ok());
    }

    #[test]
    fn reuses_model_fixture() {
        let inst = small_instance();
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
        let empty = MarketInstance::complete(vec![], vec![agent("b", &[1])]).unwrap();
        assert_eq!(parse_instance(&instance_to_json(&empty)).unwrap(), empty);
    }

    proptest! {
        #[test]
        fn arbitrary_monotone_round_trip(inst in crate::fairness::tests::arb_monotone(3, 3)) {
            prop_assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
        }

        #[test]
        fn parser_never_panics(s in ".{0,200}") {
            let _ = parse_instance(&s);
            let _ = parse_leximin(&s);
            let _ = parse_topology(&s);
        }
    }
}
