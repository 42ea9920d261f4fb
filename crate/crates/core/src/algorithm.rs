//! The BFS spanning tree algorithm in the atomic-state model.
//!
//! Each non-root node keeps a distance estimate `d` and a parent pointer
//! `par`. The root only keeps `d`. Three mutually exclusive actions:
//!
//! * `Root`: if `r.d != 0` then `r.d := 0`.
//! * `CD`: if `p.d != Dist_p` then `p.d := Dist_p`, where
//!   `Dist_p = min { q.d + 1 | q neighbor of p }`.
//! * `CP`: if `p.d == Dist_p` and `p.par.d + 1 != p.d` then
//!   `p.par := Par_dist`, the first neighbor in order with `q.d + 1 == p.d`.
//!
//! A step activates a non-empty set of enabled nodes; all of them read the
//! pre-step configuration.

use alloc::vec::Vec;
use core::fmt;

use crate::topology::{Network, NodeId};

/// Largest `d` value a configuration may hold.
///
/// Every value reachable from a configuration stays below
/// `max d + node_count`, so keeping inputs at or below this bound rules out
/// overflow of `d + 1` anywhere in the algorithm or the potentials.
pub const D_LIMIT: u64 = u64::MAX >> 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeState {
    pub d: u64,
    /// Parent pointer; `None` exactly for the root.
    pub par: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration has {found} node states, network has {expected} nodes")]
    WrongLength { expected: usize, found: usize },
    #[error("non-root node {0} has no parent")]
    MissingParent(NodeId),
    #[error("root {0} must not carry a parent")]
    RootParent(NodeId),
    #[error("parent {par} of node {node} is not one of its neighbors")]
    ParentNotNeighbor { node: NodeId, par: NodeId },
    #[error("d value {d} of node {node} exceeds the supported limit")]
    DTooLarge { node: NodeId, d: u64 },
}

/// The state of every node, indexed by node identifier.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    states: Vec<NodeState>,
}

impl Configuration {
    pub fn new(net: &Network, states: Vec<NodeState>) -> Result<Self, ConfigError> {
        if states.len() != net.node_count() {
            return Err(ConfigError::WrongLength {
                expected: net.node_count(),
                found: states.len(),
            });
        }
        for p in net.nodes() {
            let s = states[p.index()];
            if s.d > D_LIMIT {
                return Err(ConfigError::DTooLarge { node: p, d: s.d });
            }
            match (net.is_root(p), s.par) {
                (true, Some(_)) => return Err(ConfigError::RootParent(p)),
                (false, None) => return Err(ConfigError::MissingParent(p)),
                (false, Some(q)) if !net.neighbors(p).contains(&q) => {
                    return Err(ConfigError::ParentNotNeighbor { node: p, par: q })
                }
                _ => {}
            }
        }
        Ok(Configuration { states })
    }

    /// Configuration with the given `d` values and every non-root parent set
    /// to the node's first neighbor.
    pub fn with_first_parents(net: &Network, d: &[u64]) -> Result<Self, ConfigError> {
        Self::with_parents(net, d, &[])
    }

    /// Configuration with the given `d` values and explicit parents for some
    /// nodes; all other non-root nodes point at their first neighbor.
    pub fn with_parents(
        net: &Network,
        d: &[u64],
        parents: &[(NodeId, NodeId)],
    ) -> Result<Self, ConfigError> {
        if d.len() != net.node_count() {
            return Err(ConfigError::WrongLength {
                expected: net.node_count(),
                found: d.len(),
            });
        }
        let states = net
            .nodes()
            .map(|p| {
                let par = if net.is_root(p) {
                    None
                } else {
                    parents
                        .iter()
                        .find(|(n, _)| *n == p)
                        .map(|&(_, q)| q)
                        .or_else(|| net.neighbors(p).first().copied())
                };
                NodeState { d: d[p.index()], par }
            })
            .collect();
        Self::new(net, states)
    }

    /// Uniformly random `d` values in `[0, d_max]` and parents among each
    /// node's neighbors.
    pub fn random(net: &Network, d_max: u64, rng: &mut impl rand::Rng) -> Self {
        let d_max = d_max.min(D_LIMIT);
        let states = net
            .nodes()
            .map(|p| {
                let nbrs = net.neighbors(p);
                let par = (!net.is_root(p)).then(|| nbrs[rng.gen_range(0..nbrs.len())]);
                NodeState {
                    d: rng.gen_range(0..=d_max),
                    par,
                }
            })
            .collect();
        Configuration { states }
    }

    /// Wraps states without validation. Callers guarantee the invariants.
    pub(crate) fn from_states_unchecked(states: Vec<NodeState>) -> Self {
        Configuration { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[NodeState] {
        &self.states
    }

    pub fn state(&self, p: NodeId) -> NodeState {
        self.states[p.index()]
    }

    #[inline]
    pub fn d(&self, p: NodeId) -> u64 {
        self.states[p.index()].d
    }

    pub fn par(&self, p: NodeId) -> Option<NodeId> {
        self.states[p.index()].par
    }

    pub fn d_values(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.states.iter().map(|s| s.d)
    }

    /// Same parents, new distance values. `d` must have one entry per node.
    pub fn with_d_values(&self, d: impl IntoIterator<Item = u64>) -> Self {
        let states: Vec<NodeState> = self
            .states
            .iter()
            .zip(d)
            .map(|(s, d)| NodeState { d, par: s.par })
            .collect();
        assert_eq!(states.len(), self.states.len());
        Configuration { states }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match s.par {
                Some(q) => write!(f, "{}:{}^{}", i, s.d, q)?,
                None => write!(f, "{}:{}", i, s.d)?,
            }
        }
        f.write_str("]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Root,
    CD,
    CP,
}

impl ActionKind {
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Root => "Root",
            ActionKind::CD => "CD",
            ActionKind::CP => "CP",
        }
    }
}

/// Class of a step: the root moved, some other `d` moved, or only parents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepClass {
    RootStep,
    DStep,
    ParStep,
}

impl StepClass {
    /// Short tag used in serialized traces.
    pub fn tag(self) -> &'static str {
        match self {
            StepClass::RootStep => "Root",
            StepClass::DStep => "D",
            StepClass::ParStep => "Par",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "Root" => Some(StepClass::RootStep),
            "D" => Some(StepClass::DStep),
            "Par" => Some(StepClass::ParStep),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgorithmError {
    #[error("node {0} has no neighbors")]
    EmptyNeighborhood(NodeId),
    #[error("node {0} has no neighbor q with q.d + 1 = p.d")]
    NoWitness(NodeId),
    #[error("no node was activated")]
    EmptyActivation,
    #[error("node {0} is not enabled")]
    NodeNotEnabled(NodeId),
    #[error("node {0} is activated twice")]
    DuplicateActivation(NodeId),
    #[error("activated node {0} is not in the network")]
    UnknownNode(NodeId),
}

/// `Dist_p`: one more than the smallest neighbor estimate.
pub fn dist_macro(net: &Network, cfg: &Configuration, p: NodeId) -> Result<u64, AlgorithmError> {
    net.neighbors(p)
        .iter()
        .map(|&q| cfg.d(q) + 1)
        .min()
        .ok_or(AlgorithmError::EmptyNeighborhood(p))
}

/// `Par_dist`: the first neighbor, in adjacency order, sitting one level
/// below `p`.
pub fn par_dist(net: &Network, cfg: &Configuration, p: NodeId) -> Result<NodeId, AlgorithmError> {
    let dp = cfg.d(p);
    net.neighbors(p)
        .iter()
        .copied()
        .find(|&q| cfg.d(q) + 1 == dp)
        .ok_or(AlgorithmError::NoWitness(p))
}

/// The action `p` would execute if activated, if any.
pub fn enabled_action(net: &Network, cfg: &Configuration, p: NodeId) -> Option<ActionKind> {
    let dp = cfg.d(p);
    if net.is_root(p) {
        return (dp != 0).then_some(ActionKind::Root);
    }
    // A non-root node of a valid network with at least two nodes always has
    // a neighbor.
    let dist = dist_macro(net, cfg, p).ok()?;
    if dp != dist {
        return Some(ActionKind::CD);
    }
    let par = cfg.par(p)?;
    (cfg.d(par) + 1 != dp).then_some(ActionKind::CP)
}

/// Enabled nodes in ascending identifier order.
pub fn enabled_nodes(net: &Network, cfg: &Configuration) -> Vec<NodeId> {
    net.nodes().filter(|&p| enabled_action(net, cfg, p).is_some()).collect()
}

/// Executes one atomic step: every activated node runs its enabled action
/// against `cfg`.
pub fn apply_step(
    net: &Network,
    cfg: &Configuration,
    activated: &[NodeId],
) -> Result<Configuration, AlgorithmError> {
    if activated.is_empty() {
        return Err(AlgorithmError::EmptyActivation);
    }
    let mut next = cfg.states.clone();
    for (i, &p) in activated.iter().enumerate() {
        if p.index() >= net.node_count() {
            return Err(AlgorithmError::UnknownNode(p));
        }
        if activated[..i].contains(&p) {
            return Err(AlgorithmError::DuplicateActivation(p));
        }
        let action = enabled_action(net, cfg, p).ok_or(AlgorithmError::NodeNotEnabled(p))?;
        let slot = &mut next[p.index()];
        match action {
            ActionKind::Root => slot.d = 0,
            ActionKind::CD => slot.d = dist_macro(net, cfg, p)?,
            ActionKind::CP => slot.par = Some(par_dist(net, cfg, p)?),
        }
    }
    Ok(Configuration { states: next })
}

/// Classifies a legal step by which `d` values changed.
pub fn classify_step(cfg: &Configuration, next: &Configuration, root: NodeId) -> StepClass {
    if cfg.d(root) != next.d(root) {
        StepClass::RootStep
    } else if cfg.d_values().zip(next.d_values()).any(|(a, b)| a != b) {
        StepClass::DStep
    } else {
        StepClass::ParStep
    }
}

pub fn is_terminal(net: &Network, cfg: &Configuration) -> bool {
    net.nodes().all(|p| enabled_action(net, cfg, p).is_none())
}

/// Whether `d` is the exact hop distance everywhere and every parent sits one
/// level closer to the root.
pub fn is_legitimate(net: &Network, cfg: &Configuration) -> bool {
    net.nodes().all(|p| {
        let dp = cfg.d(p);
        if dp != u64::from(net.dist(p)) {
            return false;
        }
        match cfg.par(p) {
            _ if net.is_root(p) => true,
            Some(q) => cfg.d(q) + 1 == dp,
            None => false,
        }
    })
}
