//! Explicit-state exploration under every daemon choice, plus per-edge
//! monitors for each potential and order of the convergence argument.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::algorithm::{
    classify_step, dist_macro, enabled_action, is_legitimate, par_dist, ActionKind,
    Configuration, NodeState, StepClass,
};
use crate::potentials::{
    bottom_of, composite_lt, cp_count, d_aggregates, d_le, d_potential, d_potential_lt,
    edge_rank, edge_smooth, in_box, k_star, ns_set, step_smooth, CompositeMeasure, DBounds,
    DPotential,
};
use crate::topology::{Edge, Network, NodeId};

/// Exploration supports at most this many nodes (activation sets are
/// bitmasks).
pub const MAX_CHECKED_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("state limit of {0} configurations exceeded")]
    StateLimitExceeded(usize),
    #[error("observed d value {found} exceeds the limit {limit}")]
    DValueLimitExceeded { limit: u64, found: u64 },
    #[error("the step graph contains a cycle")]
    GraphNotAcyclic,
    #[error("networks with more than {MAX_CHECKED_NODES} nodes cannot be explored")]
    NetworkTooLarge,
}

/// Iterator over every configuration with `d ∈ [0, d_max]` at each node and
/// every parent choice at each non-root node.
///
/// The last node varies fastest; for each node the `d` value varies faster
/// than the parent.
#[derive(Clone, Debug)]
pub struct InitialConfigs<'a> {
    net: &'a Network,
    d_max: u64,
    /// Per node: (d, parent index).
    digits: Vec<(u64, usize)>,
    done: bool,
}

impl Iterator for InitialConfigs<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let net = self.net;
        let states = net
            .nodes()
            .map(|p| {
                let (d, pi) = self.digits[p.index()];
                let par = (!net.is_root(p)).then(|| net.neighbors(p)[pi]);
                NodeState { d, par }
            })
            .collect();
        let out = Configuration::from_states_unchecked(states);
        // advance the odometer
        self.done = true;
        for p in net.nodes().rev() {
            let (d, pi) = &mut self.digits[p.index()];
            if *d < self.d_max {
                *d += 1;
                self.done = false;
                break;
            }
            *d = 0;
            let choices = if net.is_root(p) { 1 } else { net.neighbors(p).len() };
            if *pi + 1 < choices {
                *pi += 1;
                self.done = false;
                break;
            }
            *pi = 0;
        }
        Some(out)
    }
}

pub fn enumerate_initial_configs(net: &Network, d_max: u64) -> InitialConfigs<'_> {
    InitialConfigs {
        net,
        d_max,
        digits: vec![(0, 0); net.node_count()],
        done: false,
    }
}

/// Number of configurations [`enumerate_initial_configs`] yields.
pub fn initial_config_count(net: &Network, d_max: u64) -> u128 {
    net.nodes()
        .map(|p| {
            let par = if net.is_root(p) { 1 } else { net.neighbors(p).len() as u128 };
            (u128::from(d_max) + 1) * par
        })
        .product()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_d: u64,
}

impl Limits {
    pub const DEFAULT_MAX_STATES: usize = 10_000_000;

    /// Default limits for initial configurations bounded by `d_max`.
    pub fn for_instance(net: &Network, d_max: u64) -> Self {
        Limits {
            max_states: Self::DEFAULT_MAX_STATES,
            max_d: d_max.saturating_mul(2).saturating_add(net.node_count() as u64),
        }
    }
}

/// Activation set encoded as a bitmask over node identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivationMask(pub u64);

impl ActivationMask {
    pub fn from_nodes(nodes: &[NodeId]) -> Self {
        ActivationMask(nodes.iter().fold(0, |m, p| m | (1u64 << p.0)))
    }

    pub fn nodes(self) -> Vec<NodeId> {
        (0..64u32).filter(|i| self.0 & (1 << i) != 0).map(NodeId).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepEdge {
    pub source: u32,
    pub target: u32,
    pub activated: ActivationMask,
    pub class: StepClass,
}

/// The reachable fragment of the step relation.
#[derive(Clone, Debug)]
pub struct StepGraph {
    vertices: Vec<Configuration>,
    /// Sorted by source.
    edges: Vec<StepEdge>,
    /// `edges[out_start[v]..out_start[v + 1]]` leave vertex `v`.
    out_start: Vec<usize>,
    roots: Vec<u32>,
}

impl StepGraph {
    /// Assembles a graph from parts; used for hand-built graphs.
    pub fn from_parts(vertices: Vec<Configuration>, mut edges: Vec<StepEdge>, roots: Vec<u32>) -> Self {
        edges.sort_by_key(|e| e.source);
        let mut out_start = vec![0; vertices.len() + 1];
        for e in &edges {
            out_start[e.source as usize + 1] += 1;
        }
        for v in 0..vertices.len() {
            out_start[v + 1] += out_start[v];
        }
        let mut roots = roots;
        roots.sort_unstable();
        roots.dedup();
        StepGraph {
            vertices,
            edges,
            out_start,
            roots,
        }
    }

    pub fn vertices(&self) -> &[Configuration] {
        &self.vertices
    }

    pub fn edges(&self) -> &[StepEdge] {
        &self.edges
    }

    pub fn roots(&self) -> &[u32] {
        &self.roots
    }

    pub fn out_edges(&self, v: u32) -> &[StepEdge] {
        &self.edges[self.out_start[v as usize]..self.out_start[v as usize + 1]]
    }

    pub fn sinks(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vertices.len() as u32).filter(move |&v| self.out_edges(v).is_empty())
    }

    pub fn max_d(&self) -> u64 {
        self.vertices.iter().flat_map(|c| c.d_values()).max().unwrap_or(0)
    }

    /// Vertices in topological order, or `None` when a cycle exists.
    fn topological_order(&self) -> Option<Vec<u32>> {
        let n = self.vertices.len();
        let mut indegree = vec![0usize; n];
        for e in &self.edges {
            indegree[e.target as usize] += 1;
        }
        let mut queue: VecDeque<u32> = (0..n as u32).filter(|&v| indegree[v as usize] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for e in self.out_edges(v) {
                let t = e.target as usize;
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push_back(e.target);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// The enabled nodes of `cfg` and the state each would move to.
fn moves(net: &Network, cfg: &Configuration) -> Vec<(NodeId, NodeState)> {
    let mut out = Vec::new();
    for p in net.nodes() {
        let Some(action) = enabled_action(net, cfg, p) else {
            continue;
        };
        let mut s = cfg.state(p);
        match action {
            ActionKind::Root => s.d = 0,
            ActionKind::CD => s.d = dist_macro(net, cfg, p).expect("CD-enabled node has neighbors"),
            ActionKind::CP => s.par = Some(par_dist(net, cfg, p).expect("CP guard implies a witness")),
        }
        out.push((p, s));
    }
    out
}

/// Breadth-first closure of `initials` under every non-empty activation set,
/// with one deduplicated vertex store shared by all initial configurations.
pub fn explore(
    net: &Network,
    initials: impl IntoIterator<Item = Configuration>,
    limits: Limits,
) -> Result<StepGraph, CheckError> {
    if net.node_count() > MAX_CHECKED_NODES {
        return Err(CheckError::NetworkTooLarge);
    }
    let mut index: HashMap<Configuration, u32> = HashMap::new();
    let mut vertices: Vec<Configuration> = Vec::new();
    let mut roots = Vec::new();

    let mut intern = |cfg: Configuration,
                      vertices: &mut Vec<Configuration>|
     -> Result<u32, CheckError> {
        if let Some(&v) = index.get(&cfg) {
            return Ok(v);
        }
        if vertices.len() >= limits.max_states {
            return Err(CheckError::StateLimitExceeded(limits.max_states));
        }
        if let Some(found) = cfg.d_values().find(|&d| d > limits.max_d) {
            return Err(CheckError::DValueLimitExceeded { limit: limits.max_d, found });
        }
        let v = vertices.len() as u32;
        index.insert(cfg.clone(), v);
        vertices.push(cfg);
        Ok(v)
    };

    for cfg in initials {
        roots.push(intern(cfg, &mut vertices)?);
    }

    let mut edges = Vec::new();
    let mut out_start = vec![0usize];
    let mut next_vertex = 0usize;
    while next_vertex < vertices.len() {
        let source = vertices[next_vertex].clone();
        let m = moves(net, &source);
        let k = m.len();
        for subset in 1u64..(1u64 << k) {
            let mut states = source.states().to_vec();
            let mut mask = 0u64;
            for (i, (p, s)) in m.iter().enumerate() {
                if subset & (1 << i) != 0 {
                    states[p.index()] = *s;
                    mask |= 1 << p.0;
                }
            }
            let target = Configuration::from_states_unchecked(states);
            let class = classify_step(&source, &target, net.root());
            let t = intern(target, &mut vertices)?;
            edges.push(StepEdge {
                source: next_vertex as u32,
                target: t,
                activated: ActivationMask(mask),
                class,
            });
        }
        next_vertex += 1;
        out_start.push(edges.len());
    }
    roots.sort_unstable();
    roots.dedup();
    Ok(StepGraph {
        vertices,
        edges,
        out_start,
        roots,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Convergence {
    pub acyclic: bool,
    pub all_sinks_legitimate: bool,
}

impl Convergence {
    pub fn holds(&self) -> bool {
        self.acyclic && self.all_sinks_legitimate
    }
}

pub fn verify_convergence(net: &Network, g: &StepGraph) -> Convergence {
    Convergence {
        acyclic: g.topological_order().is_some(),
        all_sinks_legitimate: g.sinks().all(|v| is_legitimate(net, &g.vertices[v as usize])),
    }
}

/// Length of the longest path from any root to a sink.
pub fn worst_case_steps(g: &StepGraph) -> Result<u64, CheckError> {
    let order = g.topological_order().ok_or(CheckError::GraphNotAcyclic)?;
    let mut longest = vec![0u64; g.vertices.len()];
    for &v in order.iter().rev() {
        longest[v as usize] = g
            .out_edges(v)
            .iter()
            .map(|e| longest[e.target as usize] + 1)
            .max()
            .unwrap_or(0);
    }
    Ok(g.roots.iter().map(|&r| longest[r as usize]).max().unwrap_or(0))
}

/// One monitored property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    /// Every activated node changes its state.
    ActivationProgress,
    /// Root steps lower the root's `d`, to 0.
    RootDecrease,
    /// Once the root's `d` is 0 it stays 0.
    RootSticky,
    /// Parent-only steps leave the d-potential unchanged.
    ParPotentialInvariant,
    /// Parent-only steps strictly lower the CP-enabled count.
    ParCpDecrease,
    /// Smooth d-steps keep every NS set.
    SmoothNsPreserved,
    /// Smooth d-steps strictly raise the sum of `d`.
    SmoothSumIncrease,
    /// Non-smooth edges of rank at most k* after the step existed before,
    /// with the same rank.
    KStarLowRanksStable,
    /// Non-smooth edges of rank below k* before the step survive unchanged.
    KStarBelowPreserved,
    /// The witness edge is non-smooth of rank k* and leaves that level.
    KStarWitness,
    /// NS sets below k* are equal across the step.
    KStarNsBelowEqual,
    /// The NS set at k* strictly shrinks.
    KStarNsShrinks,
    /// Every d-step lowers the d-potential relative to the source's box.
    DPotentialDecrease,
    /// d-steps raise the bottom envelope and lower the top envelope.
    BoundsEvolution,
    /// Non-root steps stay within the source's box.
    BoxClosure,
    /// Every step lowers the layered composite measure.
    CompositeDecrease,
}

impl Check {
    pub const ALL: [Check; 16] = [
        Check::ActivationProgress,
        Check::RootDecrease,
        Check::RootSticky,
        Check::ParPotentialInvariant,
        Check::ParCpDecrease,
        Check::SmoothNsPreserved,
        Check::SmoothSumIncrease,
        Check::KStarLowRanksStable,
        Check::KStarBelowPreserved,
        Check::KStarWitness,
        Check::KStarNsBelowEqual,
        Check::KStarNsShrinks,
        Check::DPotentialDecrease,
        Check::BoundsEvolution,
        Check::BoxClosure,
        Check::CompositeDecrease,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::ActivationProgress => "activation_progress",
            Check::RootDecrease => "root_decrease",
            Check::RootSticky => "root_sticky",
            Check::ParPotentialInvariant => "par_potential_invariant",
            Check::ParCpDecrease => "par_cp_decrease",
            Check::SmoothNsPreserved => "smooth_ns_preserved",
            Check::SmoothSumIncrease => "smooth_sum_increase",
            Check::KStarLowRanksStable => "kstar_low_ranks_stable",
            Check::KStarBelowPreserved => "kstar_below_preserved",
            Check::KStarWitness => "kstar_witness",
            Check::KStarNsBelowEqual => "kstar_ns_below_equal",
            Check::KStarNsShrinks => "kstar_ns_shrinks",
            Check::DPotentialDecrease => "d_potential_decrease",
            Check::BoundsEvolution => "bounds_evolution",
            Check::BoxClosure => "box_closure",
            Check::CompositeDecrease => "composite_decrease",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub source: Configuration,
    pub activated: Vec<NodeId>,
    pub target: Configuration,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckTally {
    pub passed: u64,
    pub violations: u64,
    pub first_counterexample: Option<Counterexample>,
}

/// Pass and violation counts for every [`Check`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonitorReport {
    tallies: [CheckTally; Check::ALL.len()],
    pub steps: u64,
}

impl MonitorReport {
    pub fn tally(&self, c: Check) -> &CheckTally {
        &self.tallies[c as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Check, &CheckTally)> {
        Check::ALL.iter().map(move |&c| (c, &self.tallies[c as usize]))
    }

    pub fn total_violations(&self) -> u64 {
        self.tallies.iter().map(|t| t.violations).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.total_violations() == 0
    }

    pub fn merge(&mut self, other: &MonitorReport) {
        self.steps += other.steps;
        for (mine, theirs) in self.tallies.iter_mut().zip(&other.tallies) {
            mine.passed += theirs.passed;
            mine.violations += theirs.violations;
            if mine.first_counterexample.is_none() {
                mine.first_counterexample = theirs.first_counterexample.clone();
            }
        }
    }

    fn record(&mut self, c: Check, ok: bool, step: &EdgeView<'_>) {
        let t = &mut self.tallies[c as usize];
        if ok {
            t.passed += 1;
        } else {
            t.violations += 1;
            if t.first_counterexample.is_none() {
                t.first_counterexample = Some(Counterexample {
                    source: step.source.clone(),
                    activated: step.activated.to_vec(),
                    target: step.target.clone(),
                });
            }
        }
    }
}

struct EdgeView<'a> {
    source: &'a Configuration,
    activated: &'a [NodeId],
    target: &'a Configuration,
}

/// Quantities that depend only on the source of a step, shared across all
/// of its outgoing edges.
struct SourceFacts {
    bounds: DBounds,
    measure: CompositeMeasure,
    top: Configuration,
}

impl SourceFacts {
    fn new(net: &Network, source: &Configuration) -> Self {
        let bounds = DBounds::of(net, source);
        let measure = CompositeMeasure::measure(net, &bounds, source);
        let top = bounds.top.clone();
        SourceFacts { bounds, measure, top }
    }
}

/// Non-smooth edges with their ranks, in canonical edge order.
fn non_smooth(net: &Network, cfg: &Configuration) -> Vec<(Edge, u64)> {
    net.edges()
        .iter()
        .filter(|&&e| !edge_smooth(cfg, e))
        .map(|&e| (e, edge_rank(cfg, e)))
        .collect()
}

fn check_edge(
    net: &Network,
    facts: &SourceFacts,
    step: &EdgeView<'_>,
    report: &mut MonitorReport,
) {
    let (src, tgt) = (step.source, step.target);
    let root = net.root();
    let class = classify_step(src, tgt, root);
    report.steps += 1;

    report.record(
        Check::ActivationProgress,
        step.activated.iter().all(|&p| src.state(p) != tgt.state(p)),
        step,
    );
    if src.d(root) == 0 {
        report.record(Check::RootSticky, tgt.d(root) == 0, step);
    }

    let target_pot: DPotential = d_potential(net, &facts.bounds, tgt);
    let target_measure = CompositeMeasure {
        root_d: tgt.d(root),
        d_pot: target_pot,
        cp: cp_count(net, tgt),
    };
    report.record(
        Check::CompositeDecrease,
        composite_lt(&target_measure, &facts.measure, class != StepClass::RootStep),
        step,
    );
    if class != StepClass::RootStep {
        report.record(Check::BoxClosure, in_box(&facts.bounds, tgt), step);
    }

    match class {
        StepClass::RootStep => {
            report.record(
                Check::RootDecrease,
                tgt.d(root) < src.d(root) && tgt.d(root) == 0,
                step,
            );
        }
        StepClass::ParStep => {
            report.record(
                Check::ParPotentialInvariant,
                target_measure.d_pot == facts.measure.d_pot,
                step,
            );
            report.record(Check::ParCpDecrease, target_measure.cp < facts.measure.cp, step);
        }
        StepClass::DStep => {
            report.record(
                Check::DPotentialDecrease,
                d_potential_lt(&target_measure.d_pot, &facts.measure.d_pot) == Ok(true),
                step,
            );
            let target_top = crate::potentials::top_of(net, tgt);
            report.record(
                Check::BoundsEvolution,
                d_le(&facts.bounds.bot, &bottom_of(tgt)) && d_le(&target_top, &facts.top),
                step,
            );
            check_d_step(net, step, report);
        }
    }
}

fn check_d_step(net: &Network, step: &EdgeView<'_>, report: &mut MonitorReport) {
    let (src, tgt) = (step.source, step.target);
    let smooth = step_smooth(net, src, tgt).expect("d-step");
    if smooth {
        report.record(
            Check::SmoothNsPreserved,
            non_smooth(net, src) == non_smooth(net, tgt),
            step,
        );
        report.record(
            Check::SmoothSumIncrease,
            d_aggregates(tgt).sum_d > d_aggregates(src).sum_d,
            step,
        );
        return;
    }
    let (k, witness) = k_star(net, src, tgt).expect("non-smooth d-step has k*");
    let edges = net.edges();
    report.record(
        Check::KStarLowRanksStable,
        edges.iter().all(|&e| {
            let after_ns = !edge_smooth(tgt, e) && edge_rank(tgt, e) <= k;
            !after_ns || (!edge_smooth(src, e) && edge_rank(src, e) == edge_rank(tgt, e))
        }),
        step,
    );
    report.record(
        Check::KStarBelowPreserved,
        edges.iter().all(|&e| {
            let before_ns = !edge_smooth(src, e) && edge_rank(src, e) < k;
            !before_ns || (!edge_smooth(tgt, e) && edge_rank(src, e) == edge_rank(tgt, e))
        }),
        step,
    );
    let before_k = ns_set(net, src, k);
    report.record(
        Check::KStarWitness,
        before_k.contains(&witness)
            && (edge_smooth(tgt, witness) || edge_rank(tgt, witness) > edge_rank(src, witness)),
        step,
    );
    let below_src: Vec<_> = non_smooth(net, src).into_iter().filter(|&(_, r)| r < k).collect();
    let below_tgt: Vec<_> = non_smooth(net, tgt).into_iter().filter(|&(_, r)| r < k).collect();
    report.record(Check::KStarNsBelowEqual, below_src == below_tgt, step);
    report.record(
        Check::KStarNsShrinks,
        ns_set(net, tgt, k).is_proper_subset(&before_k),
        step,
    );
}

/// Runs every applicable check on one legal step.
pub fn monitor_step(
    net: &Network,
    source: &Configuration,
    activated: &[NodeId],
    target: &Configuration,
) -> MonitorReport {
    let mut report = MonitorReport::default();
    let facts = SourceFacts::new(net, source);
    check_edge(net, &facts, &EdgeView { source, activated, target }, &mut report);
    report
}

/// Runs [`monitor_step`] on every edge of `g`.
pub fn monitor_graph(net: &Network, g: &StepGraph) -> MonitorReport {
    let mut report = MonitorReport::default();
    for (v, source) in g.vertices.iter().enumerate() {
        let out = g.out_edges(v as u32);
        if out.is_empty() {
            continue;
        }
        let facts = SourceFacts::new(net, source);
        for e in out {
            let activated = e.activated.nodes();
            let view = EdgeView {
                source,
                activated: &activated,
                target: &g.vertices[e.target as usize],
            };
            check_edge(net, &facts, &view, &mut report);
        }
    }
    report
}

/// Everything the exhaustive check produces for one network.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub initial_count: usize,
    pub states: usize,
    pub edges: usize,
    pub convergence: Convergence,
    pub worst_case_steps: Option<u64>,
    pub monitors: MonitorReport,
}

impl CheckOutcome {
    pub fn verified(&self) -> bool {
        self.convergence.holds() && self.monitors.is_clean()
    }
}

/// Enumerates initial configurations up to `d_max`, explores, verifies
/// convergence, monitors every edge and measures the longest execution.
pub fn check_network(
    net: &Network,
    d_max: u64,
    limits: Limits,
) -> Result<(StepGraph, CheckOutcome), CheckError> {
    let initial_count = initial_config_count(net, d_max) as usize;
    let g = explore(net, enumerate_initial_configs(net, d_max), limits)?;
    let convergence = verify_convergence(net, &g);
    let monitors = monitor_graph(net, &g);
    let worst_case_steps = worst_case_steps(&g).ok();
    let outcome = CheckOutcome {
        initial_count,
        states: g.vertices.len(),
        edges: g.edges.len(),
        convergence,
        worst_case_steps,
        monitors,
    };
    Ok((g, outcome))
}
