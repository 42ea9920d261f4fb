//! Reference implementations and generators shared by the integration tests.
//! Nothing here calls into the crate's algorithm or potential code.

#![allow(dead_code)]

use proptest::prelude::*;
use stabilis_core::topology::{generate, Shape};
use stabilis_core::{Configuration, Network, NodeId, NodeState};

/// Hop distance to the root by enumerating every simple path.
pub fn all_paths_dist(adj: &[Vec<NodeId>], root: usize) -> Vec<Option<usize>> {
    fn walk(adj: &[Vec<NodeId>], p: usize, len: usize, seen: &mut Vec<bool>, best: &mut [Option<usize>]) {
        if best[p].is_none_or(|b| len < b) {
            best[p] = Some(len);
        }
        for q in &adj[p] {
            let q = q.index();
            if !seen[q] {
                seen[q] = true;
                walk(adj, q, len + 1, seen, best);
                seen[q] = false;
            }
        }
    }
    let mut best = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    seen[root] = true;
    walk(adj, root, 0, &mut seen, &mut best);
    best
}

/// Plain-vector state used by the reference step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plain {
    pub d: Vec<u64>,
    pub par: Vec<Option<usize>>,
}

impl Plain {
    pub fn of(cfg: &Configuration) -> Self {
        Plain {
            d: cfg.d_values().collect(),
            par: cfg.states().iter().map(|s| s.par.map(|q| q.index())).collect(),
        }
    }
}

fn nbrs(net: &Network, p: usize) -> Vec<usize> {
    net.neighbors(NodeId(p as u32)).iter().map(|q| q.index()).collect()
}

/// Which statement (if any) node `p` would execute: 0 root, 1 CD, 2 CP.
pub fn ref_guard(net: &Network, s: &Plain, p: usize) -> Option<u8> {
    if p == net.root().index() {
        return (s.d[p] != 0).then_some(0);
    }
    let ns = nbrs(net, p);
    let dist = ns.iter().map(|&q| s.d[q] + 1).min().unwrap();
    if s.d[p] != dist {
        return Some(1);
    }
    let par = s.par[p].unwrap();
    (s.d[par] + 1 != s.d[p]).then_some(2)
}

pub fn ref_enabled(net: &Network, s: &Plain) -> Vec<usize> {
    (0..s.d.len()).filter(|&p| ref_guard(net, s, p).is_some()).collect()
}

/// Every activated node reads `s`; writes go to a fresh copy.
pub fn ref_step(net: &Network, s: &Plain, act: &[usize]) -> Plain {
    let mut out = s.clone();
    for &p in act {
        match ref_guard(net, s, p).expect("activated node is enabled") {
            0 => out.d[p] = 0,
            1 => out.d[p] = nbrs(net, p).iter().map(|&q| s.d[q] + 1).min().unwrap(),
            _ => out.par[p] = nbrs(net, p).into_iter().find(|&q| s.d[q] + 1 == s.d[p]),
        }
    }
    out
}

pub fn ref_legitimate(net: &Network, s: &Plain) -> bool {
    let dist = all_paths_dist(net.adjacency(), net.root().index());
    (0..s.d.len()).all(|p| {
        let dp = dist[p].unwrap() as u64;
        s.d[p] == dp && (p == net.root().index() || s.d[s.par[p].unwrap()] + 1 == dp)
    })
}

/// Longest execution from `s`, by plain recursion over every activation set.
pub fn ref_longest(net: &Network, s: &Plain) -> u64 {
    let en = ref_enabled(net, s);
    let mut best = 0;
    for mask in 1u32..(1 << en.len()) {
        let act: Vec<usize> = (0..en.len()).filter(|i| mask & (1 << i) != 0).map(|i| en[i]).collect();
        best = best.max(1 + ref_longest(net, &ref_step(net, s, &act)));
    }
    best
}

pub fn shape_strategy() -> impl Strategy<Value = Shape> {
    prop_oneof![
        Just(Shape::Path),
        Just(Shape::Cycle),
        Just(Shape::Star),
        Just(Shape::Complete),
        any::<u64>().prop_map(|seed| Shape::Random { seed }),
        any::<u64>().prop_map(|seed| Shape::Random { seed }),
    ]
}

pub fn network_strategy(max_n: usize) -> impl Strategy<Value = Network> {
    (shape_strategy(), 1..=max_n).prop_map(|(s, n)| generate(s, n).unwrap())
}

/// A configuration with `d ≤ d_max` and arbitrary parents, built from raw
/// choice vectors so shrinking stays meaningful.
pub fn config_from_choices(net: &Network, d: &[u64], picks: &[usize]) -> Configuration {
    let states = net
        .nodes()
        .map(|p| NodeState {
            d: d[p.index()],
            par: (!net.is_root(p)).then(|| {
                let ns = net.neighbors(p);
                ns[picks[p.index()] % ns.len()]
            }),
        })
        .collect();
    Configuration::new(net, states).unwrap()
}

pub fn net_and_config(max_n: usize, d_max: u64) -> impl Strategy<Value = (Network, Configuration)> {
    network_strategy(max_n).prop_flat_map(move |net| {
        let n = net.node_count();
        (
            proptest::collection::vec(0..=d_max, n),
            proptest::collection::vec(any::<usize>(), n),
        )
            .prop_map(move |(d, picks)| {
                let cfg = config_from_choices(&net, &d, &picks);
                (net.clone(), cfg)
            })
    })
}

/// The constructed eight-node scenario: root 0 and p1..p7 as nodes 1..7.
pub fn eight_node_network() -> Network {
    Network::from_edges(
        8,
        NodeId(0),
        &[(0, 1), (1, 2), (2, 3), (2, 6), (3, 4), (3, 7), (4, 5), (5, 6)],
    )
    .unwrap()
}

pub fn eight_node_gamma1(net: &Network) -> Configuration {
    Configuration::with_first_parents(net, &[10, 9, 9, 8, 10, 9, 8, 10]).unwrap()
}

/// [`ref_longest`] with a memo table, for larger state spaces.
pub fn ref_longest_memo(net: &Network, s: &Plain, memo: &mut std::collections::HashMap<Plain, u64>) -> u64 {
    if let Some(&v) = memo.get(s) {
        return v;
    }
    let en = ref_enabled(net, s);
    let mut best = 0;
    for mask in 1u32..(1 << en.len()) {
        let act: Vec<usize> = (0..en.len()).filter(|i| mask & (1 << i) != 0).map(|i| en[i]).collect();
        best = best.max(1 + ref_longest_memo(net, &ref_step(net, s, &act), memo));
    }
    memo.insert(s.clone(), best);
    best
}
