//! JSON encodings of networks, configurations, traces and activation plans.
//!
//! Maps keyed by node identifier are written in ascending numeric order.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use stabilis_core::algorithm::ConfigError;
use stabilis_core::daemons::{Outcome, Trace, TraceStep};
use stabilis_core::topology::TopologyError;
use stabilis_core::{Configuration, Network, NodeId, NodeState, StepClass};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Topology(#[from] TopologyError),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("bad node key {0:?}")]
    BadKey(String),
    #[error("node {0} is missing")]
    MissingNode(u32),
    #[error("node {node} out of range for a network of {nodes} nodes")]
    NodeOutOfRange { node: u32, nodes: usize },
    #[error("unknown step class {0:?}")]
    UnknownClass(String),
    #[error("unknown outcome {0:?}")]
    UnknownOutcome(String),
}

/// Parses node-keyed maps into a dense vector; keys must be exactly `0..n`.
fn dense<T>(map: BTreeMap<String, T>, n: usize) -> Result<Vec<T>, FormatError> {
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (key, value) in map {
        let id: u32 = key.parse().map_err(|_| FormatError::BadKey(key.clone()))?;
        if id as usize >= n {
            return Err(FormatError::NodeOutOfRange { node: id, nodes: n });
        }
        slots[id as usize] = Some(value);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(FormatError::MissingNode(i as u32)))
        .collect()
}

#[derive(Deserialize)]
struct NetworkDoc {
    nodes: usize,
    root: u32,
    adjacency: BTreeMap<String, Vec<u32>>,
}

pub fn parse_network(text: &str) -> Result<Network, FormatError> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    let adjacency = dense(doc.adjacency, doc.nodes)?
        .into_iter()
        .map(|nbrs| nbrs.into_iter().map(NodeId).collect())
        .collect();
    Ok(Network::new(NodeId(doc.root), adjacency)?)
}

/// Serializes as `{"nodes": N, "root": r, "adjacency": {...}}`.
pub struct NetworkJson<'a>(pub &'a Network);

struct AdjacencyJson<'a>(&'a Network);

impl Serialize for AdjacencyJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.node_count()))?;
        for p in self.0.nodes() {
            let nbrs: Vec<u32> = self.0.neighbors(p).iter().map(|q| q.0).collect();
            map.serialize_entry(&p.0.to_string(), &nbrs)?;
        }
        map.end()
    }
}

impl Serialize for NetworkJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Network", 3)?;
        st.serialize_field("nodes", &self.0.node_count())?;
        st.serialize_field("root", &self.0.root().0)?;
        st.serialize_field("adjacency", &AdjacencyJson(self.0))?;
        st.end()
    }
}

#[derive(Deserialize, Serialize)]
struct StateDoc {
    d: u64,
    par: Option<u32>,
}

type ConfigDoc = BTreeMap<String, StateDoc>;

fn config_from_doc(net: &Network, doc: ConfigDoc) -> Result<Configuration, FormatError> {
    let states = dense(doc, net.node_count())?
        .into_iter()
        .map(|s| NodeState {
            d: s.d,
            par: s.par.map(NodeId),
        })
        .collect();
    Ok(Configuration::new(net, states)?)
}

pub fn parse_config(net: &Network, text: &str) -> Result<Configuration, FormatError> {
    config_from_doc(net, serde_json::from_str(text)?)
}

/// Serializes as `{"0": {"d": 0, "par": null}, "1": {"d": 1, "par": 0}, ...}`.
pub struct ConfigJson<'a>(pub &'a Configuration);

impl Serialize for ConfigJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (i, st) in self.0.states().iter().enumerate() {
            map.serialize_entry(
                &i.to_string(),
                &StateDoc {
                    d: st.d,
                    par: st.par.map(|q| q.0),
                },
            )?;
        }
        map.end()
    }
}

#[derive(Deserialize)]
struct StepDoc {
    activated: Vec<u32>,
    class: String,
    config: ConfigDoc,
}

#[derive(Deserialize)]
struct TraceDoc {
    initial: ConfigDoc,
    steps: Vec<StepDoc>,
    outcome: String,
    #[serde(default)]
    max_steps: Option<usize>,
}

pub fn parse_trace(net: &Network, text: &str) -> Result<Trace, FormatError> {
    let doc: TraceDoc = serde_json::from_str(text)?;
    let steps = doc
        .steps
        .into_iter()
        .map(|s| {
            Ok(TraceStep {
                activated: s.activated.into_iter().map(NodeId).collect(),
                class: StepClass::from_tag(&s.class).ok_or(FormatError::UnknownClass(s.class))?,
                config: config_from_doc(net, s.config)?,
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    let outcome = match doc.outcome.as_str() {
        "terminated" => Outcome::Terminated,
        "truncated" => Outcome::Truncated(doc.max_steps.unwrap_or(steps.len())),
        _ => return Err(FormatError::UnknownOutcome(doc.outcome)),
    };
    Ok(Trace {
        initial: config_from_doc(net, doc.initial)?,
        steps,
        outcome,
    })
}

/// Serializes as
/// `{"initial": .., "steps": [{"activated": [..], "class": "D", "config": ..}], "outcome": ..}`;
/// truncated traces also carry `"max_steps"`.
pub struct TraceJson<'a>(pub &'a Trace);

struct StepJson<'a>(&'a TraceStep);

impl Serialize for StepJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Step", 3)?;
        let activated: Vec<u32> = self.0.activated.iter().map(|p| p.0).collect();
        st.serialize_field("activated", &activated)?;
        st.serialize_field("class", self.0.class.tag())?;
        st.serialize_field("config", &ConfigJson(&self.0.config))?;
        st.end()
    }
}

impl Serialize for TraceJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let t = self.0;
        let truncated = matches!(t.outcome, Outcome::Truncated(_));
        let mut st = s.serialize_struct("Trace", if truncated { 4 } else { 3 })?;
        st.serialize_field("initial", &ConfigJson(&t.initial))?;
        let steps: Vec<StepJson<'_>> = t.steps.iter().map(StepJson).collect();
        st.serialize_field("steps", &steps)?;
        match t.outcome {
            Outcome::Terminated => st.serialize_field("outcome", "terminated")?,
            Outcome::Truncated(n) => {
                st.serialize_field("outcome", "truncated")?;
                st.serialize_field("max_steps", &n)?;
            }
        }
        st.end()
    }
}

/// A scripted activation plan: a JSON array of node-id arrays.
pub fn parse_plan(text: &str) -> Result<Vec<Vec<NodeId>>, FormatError> {
    let raw: Vec<Vec<u32>> = serde_json::from_str(text)?;
    Ok(raw
        .into_iter()
        .map(|set| set.into_iter().map(NodeId).collect())
        .collect())
}
