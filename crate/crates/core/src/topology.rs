//! Rooted, bidirectional, connected networks.
//!
//! A [`Network`] is immutable once built. Construction always validates, so
//! every value of the type satisfies the network invariants: symmetric links,
//! connectivity, no self-loops, no duplicate neighbors, and a root that names
//! an existing node.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier of a node: its index in the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An undirected link, stored with the smaller identifier first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: NodeId,
    hi: NodeId,
}

impl Edge {
    /// Canonical edge between two distinct nodes, in either order.
    pub fn new(a: NodeId, b: NodeId) -> Self {
        debug_assert_ne!(a, b, "edge endpoints must differ");
        if a <= b {
            Edge { lo: a, hi: b }
        } else {
            Edge { lo: b, hi: a }
        }
    }

    pub fn lo(&self) -> NodeId {
        self.lo
    }

    pub fn hi(&self) -> NodeId {
        self.hi
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.lo, self.hi)
    }

    pub fn touches(&self, p: NodeId) -> bool {
        self.lo == p || self.hi == p
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("network has no root: root {0} is not a node")]
    NoRoot(NodeId),
    #[error("node {node} lists unknown neighbor {neighbor}")]
    UnknownNeighbor { node: NodeId, neighbor: NodeId },
    #[error("node {0} lists itself as a neighbor")]
    SelfLoop(NodeId),
    #[error("node {node} lists neighbor {neighbor} more than once")]
    DuplicateNeighbor { node: NodeId, neighbor: NodeId },
    #[error("asymmetric link: {from} lists {to} but {to} does not list {from}")]
    AsymmetricLink { from: NodeId, to: NodeId },
    #[error("network is not connected: node {0} is unreachable from the root")]
    NotConnected(NodeId),
    #[error("network size must be at least 1")]
    InvalidSize,
}

/// Checks every network invariant on a raw adjacency description.
///
/// Node identifiers are the indices of `adjacency`.
pub fn validate_network(root: NodeId, adjacency: &[Vec<NodeId>]) -> Result<(), TopologyError> {
    let n = adjacency.len();
    if root.index() >= n {
        return Err(TopologyError::NoRoot(root));
    }
    for (i, nbrs) in adjacency.iter().enumerate() {
        let p = NodeId::from(i);
        for (j, &q) in nbrs.iter().enumerate() {
            if q.index() >= n {
                return Err(TopologyError::UnknownNeighbor { node: p, neighbor: q });
            }
            if q == p {
                return Err(TopologyError::SelfLoop(p));
            }
            if nbrs[..j].contains(&q) {
                return Err(TopologyError::DuplicateNeighbor { node: p, neighbor: q });
            }
        }
    }
    for (i, nbrs) in adjacency.iter().enumerate() {
        let p = NodeId::from(i);
        for &q in nbrs {
            if !adjacency[q.index()].contains(&p) {
                return Err(TopologyError::AsymmetricLink { from: p, to: q });
            }
        }
    }
    let dist = bfs_distances(root, adjacency);
    if let Some(i) = dist.iter().position(Option::is_none) {
        return Err(TopologyError::NotConnected(NodeId::from(i)));
    }
    Ok(())
}

fn bfs_distances(root: NodeId, adjacency: &[Vec<NodeId>]) -> Vec<Option<u32>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[root.index()] = Some(0);
    queue.push_back(root);
    while let Some(p) = queue.pop_front() {
        let dp = dist[p.index()].unwrap();
        for &q in &adjacency[p.index()] {
            if dist[q.index()].is_none() {
                dist[q.index()] = Some(dp + 1);
                queue.push_back(q);
            }
        }
    }
    dist
}

/// A validated rooted network.
///
/// The order of each neighbor sequence is part of the network's identity:
/// it decides which neighbor a node picks first when choosing a parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Network {
    root: NodeId,
    adjacency: Vec<Vec<NodeId>>,
    edges: Vec<Edge>,
    dist: Vec<u32>,
    /// Nodes sorted by increasing distance to the root (ties by identifier).
    layers: Vec<NodeId>,
}

impl Network {
    pub fn new(root: NodeId, adjacency: Vec<Vec<NodeId>>) -> Result<Self, TopologyError> {
        validate_network(root, &adjacency)?;
        let dist: Vec<u32> = bfs_distances(root, &adjacency)
            .into_iter()
            .map(|d| d.unwrap())
            .collect();
        let mut edges: Vec<Edge> = adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().map(move |&q| Edge::new(NodeId::from(i), q)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut layers: Vec<NodeId> = (0..adjacency.len()).map(NodeId::from).collect();
        layers.sort_by_key(|p| (dist[p.index()], *p));
        Ok(Network {
            root,
            adjacency,
            edges,
            dist,
            layers,
        })
    }

    /// Builds a network from an undirected edge list, neighbor sequences in
    /// ascending identifier order.
    pub fn from_edges(
        node_count: usize,
        root: NodeId,
        edges: &[(u32, u32)],
    ) -> Result<Self, TopologyError> {
        if node_count == 0 {
            return Err(TopologyError::InvalidSize);
        }
        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            let (a, b) = (NodeId(a), NodeId(b));
            if a.index() >= node_count {
                return Err(TopologyError::UnknownNeighbor { node: b, neighbor: a });
            }
            if b.index() >= node_count {
                return Err(TopologyError::UnknownNeighbor { node: a, neighbor: b });
            }
            adjacency[a.index()].push(b);
            if a != b {
                adjacency[b.index()].push(a);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Network::new(root, adjacency)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn is_root(&self, p: NodeId) -> bool {
        p == self.root
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator + Clone {
        (0..self.adjacency.len()).map(NodeId::from)
    }

    pub fn neighbors(&self, p: NodeId) -> &[NodeId] {
        &self.adjacency[p.index()]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    /// Canonical edge set, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, e: Edge) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Hop distance of every node to the root, indexed by node.
    pub fn dist_to_root(&self) -> &[u32] {
        &self.dist
    }

    pub fn dist(&self, p: NodeId) -> u32 {
        self.dist[p.index()]
    }

    /// Nodes in non-decreasing order of distance to the root.
    pub fn by_distance(&self) -> &[NodeId] {
        &self.layers
    }
}

/// Shapes understood by [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Path,
    Cycle,
    Star,
    Complete,
    /// Random connected graph; the seed is the only source of randomness.
    Random { seed: u64 },
}

/// Builds a network of the given shape on `n` nodes, rooted at node 0.
///
/// Random networks attach each node to a uniformly chosen earlier node
/// (which makes them connected) and then add each remaining pair with
/// probability 1/3.
pub fn generate(shape: Shape, n: usize) -> Result<Network, TopologyError> {
    if n == 0 {
        return Err(TopologyError::InvalidSize);
    }
    let n32 = u32::try_from(n).map_err(|_| TopologyError::InvalidSize)?;
    let mut edges = Vec::new();
    match shape {
        Shape::Path => edges.extend((1..n32).map(|i| (i - 1, i))),
        Shape::Cycle => {
            edges.extend((1..n32).map(|i| (i - 1, i)));
            if n32 >= 3 {
                edges.push((n32 - 1, 0));
            }
        }
        Shape::Star => edges.extend((1..n32).map(|i| (0, i))),
        Shape::Complete => {
            for a in 0..n32 {
                edges.extend((a + 1..n32).map(|b| (a, b)));
            }
        }
        Shape::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tree = Vec::new();
            for i in 1..n32 {
                let parent = rng.gen_range(0..i);
                tree.push((parent, i));
            }
            for a in 0..n32 {
                for b in a + 1..n32 {
                    if tree.contains(&(a, b)) || rng.gen_ratio(1, 3) {
                        edges.push((a, b));
                    }
                }
            }
        }
    }
    Network::from_edges(n, NodeId(0), &edges)
}

/// Every connected labeled graph on `1..=max_n` nodes, rooted at node 0,
/// with ascending neighbor sequences. Graphs are listed by node count, then
/// by the bitmask of present node pairs.
pub fn enumerate_networks(max_n: usize) -> Vec<Network> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        let pairs: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
            .collect();
        assert!(pairs.len() < 64, "enumeration limited to graphs with fewer than 64 node pairs");
        for mask in 0u64..(1u64 << pairs.len()) {
            let edges: Vec<(u32, u32)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e)
                .collect();
            if let Ok(net) = Network::from_edges(n, NodeId(0), &edges) {
                out.push(net);
            }
        }
    }
    out
}
