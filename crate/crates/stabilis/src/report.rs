//! JSON reports and DOT dumps.

use std::fmt::Write as _;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};
use stabilis_core::algorithm::{enabled_action, is_legitimate, is_terminal};
use stabilis_core::checker::{CheckOutcome, CheckTally, Counterexample};
use stabilis_core::potentials::{cp_count, d_aggregates, d_potential, DBounds, EdgeSet};
use stabilis_core::{Configuration, MonitorReport, Network, StepGraph};

use crate::formats::{ConfigJson, NetworkJson};

fn edge_list(set: &EdgeSet) -> Vec<[u32; 2]> {
    set.as_slice().iter().map(|e| [e.lo().0, e.hi().0]).collect()
}

pub struct MonitorJson<'a>(pub &'a MonitorReport);

struct TallyJson<'a>(&'a CheckTally);

struct CounterexampleJson<'a>(&'a Counterexample);

impl Serialize for CounterexampleJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = self.0;
        let mut st = s.serialize_struct("Counterexample", 3)?;
        st.serialize_field("source", &ConfigJson(&c.source))?;
        let act: Vec<u32> = c.activated.iter().map(|p| p.0).collect();
        st.serialize_field("activated", &act)?;
        st.serialize_field("target", &ConfigJson(&c.target))?;
        st.end()
    }
}

impl Serialize for TallyJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Tally", 3)?;
        st.serialize_field("passed", &self.0.passed)?;
        st.serialize_field("violations", &self.0.violations)?;
        st.serialize_field(
            "counterexample",
            &self.0.first_counterexample.as_ref().map(CounterexampleJson),
        )?;
        st.end()
    }
}

struct ChecksJson<'a>(&'a MonitorReport);

impl Serialize for ChecksJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(None)?;
        for (check, tally) in self.0.iter() {
            map.serialize_entry(check.name(), &TallyJson(tally))?;
        }
        map.end()
    }
}

impl Serialize for MonitorJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MonitorReport", 3)?;
        st.serialize_field("steps", &self.0.steps)?;
        st.serialize_field("violations", &self.0.total_violations())?;
        st.serialize_field("checks", &ChecksJson(self.0))?;
        st.end()
    }
}

/// Per-network entry of a `check` report.
pub struct NetworkCheckJson<'a> {
    pub network: &'a Network,
    pub outcome: &'a CheckOutcome,
}

impl Serialize for NetworkCheckJson<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let o = self.outcome;
        let mut st = s.serialize_struct("NetworkCheck", 9)?;
        st.serialize_field("network", &NetworkJson(self.network))?;
        st.serialize_field("initial_configurations", &o.initial_count)?;
        st.serialize_field("states", &o.states)?;
        st.serialize_field("edges", &o.edges)?;
        st.serialize_field("acyclic", &o.convergence.acyclic)?;
        st.serialize_field("all_sinks_legitimate", &o.convergence.all_sinks_legitimate)?;
        st.serialize_field("worst_case_steps", &o.worst_case_steps)?;
        st.serialize_field("verified", &o.verified())?;
        st.serialize_field("monitors", &MonitorJson(&o.monitors))?;
        st.end()
    }
}

/// Full dump of every potential for one configuration, with `γ0` set to the
/// configuration itself.
pub fn potential_report(net: &Network, cfg: &Configuration) -> Value {
    let agg = d_aggregates(cfg);
    let bounds = DBounds::of(net, cfg);
    let phi = d_potential(net, &bounds, cfg);
    let (lo, hi) = bounds.k0();
    let (sum_lo, sum_hi) = bounds.sum_range();
    let mut by_rank = serde_json::Map::new();
    for (k, set) in phi.ns_by_rank.iter() {
        if !set.is_empty() {
            by_rank.insert(k.to_string(), json!(edge_list(set)));
        }
    }
    let dense: Vec<Vec<[u32; 2]>> = phi.ns_by_rank.iter().map(|(_, s)| edge_list(s)).collect();
    let mut enabled = serde_json::Map::new();
    for p in net.nodes() {
        enabled.insert(
            p.0.to_string(),
            enabled_action(net, cfg, p).map_or(Value::Null, |a| json!(a.name())),
        );
    }
    json!({
        "aggregates": {
            "min_d": agg.min_d,
            "max_d": agg.max_d,
            "sum_d": agg.sum_d,
        },
        "bounds": {
            "bot": bounds.bot.d_values().collect::<Vec<_>>(),
            "top": bounds.top.d_values().collect::<Vec<_>>(),
        },
        "ns_by_rank": by_rank,
        "phi": {
            "k0": [lo, hi],
            "ns_by_rank": dense,
            "sum_d": agg.sum_d,
            "sum_range": [sum_lo, sum_hi],
        },
        "cp": cp_count(net, cfg),
        "enabled": enabled,
        "terminal": is_terminal(net, cfg),
        "legitimate": is_legitimate(net, cfg),
    })
}

/// Graphviz rendering: vertices labeled with their `d` vectors, edges with
/// the activation set and step class.
pub fn dot(g: &StepGraph) -> String {
    let mut out = String::from("digraph steps {\n");
    for (i, c) in g.vertices().iter().enumerate() {
        let d: Vec<String> = c.d_values().map(|d| d.to_string()).collect();
        let pars: Vec<String> = c
            .states()
            .iter()
            .map(|s| s.par.map_or("-".to_string(), |q| q.0.to_string()))
            .collect();
        let _ = writeln!(
            out,
            "  n{i} [label=\"d=({}) par=({})\"{}];",
            d.join(","),
            pars.join(","),
            if g.out_edges(i as u32).is_empty() { " shape=doublecircle" } else { "" }
        );
    }
    for e in g.edges() {
        let act: Vec<String> = e.activated.nodes().iter().map(|p| p.0.to_string()).collect();
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{{{}}} {}\"];",
            e.source,
            e.target,
            act.join(","),
            e.class.tag()
        );
    }
    out.push_str("}\n");
    out
}
