//! Potential functions and orders behind the convergence argument.
//!
//! Three layers, from outermost to innermost:
//!
//! * the root's `d`, which only ever drops (to 0, once);
//! * for steps that move some non-root `d`, the pair
//!   `(NS sets by rank, sum of d)` relative to a box `B(γ0)`, ordered by a
//!   set-lexicographic order on the first component and by *decreasing* sum
//!   on the second;
//! * for parent-only steps, the number of CP-enabled nodes.

use alloc::vec;
use alloc::vec::Vec;

use crate::algorithm::{classify_step, enabled_action, ActionKind, Configuration, StepClass};
use crate::topology::{Edge, Network, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PotentialError {
    #[error("the step does not change any non-root d value without moving the root")]
    NotADStep,
    #[error("the step is not a non-smooth d-step")]
    NotNonSmoothDStep,
    #[error("rank intervals differ: [{0}, {1}] vs [{2}, {3}]")]
    K0Mismatch(u64, u64, u64, u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DAggregates {
    pub min_d: u64,
    pub max_d: u64,
    /// Multiset sum; wide enough that it never overflows.
    pub sum_d: u128,
}

pub fn d_aggregates(cfg: &Configuration) -> DAggregates {
    let mut agg = DAggregates {
        min_d: u64::MAX,
        max_d: 0,
        sum_d: 0,
    };
    for d in cfg.d_values() {
        agg.min_d = agg.min_d.min(d);
        agg.max_d = agg.max_d.max(d);
        agg.sum_d += u128::from(d);
    }
    if cfg.is_empty() {
        agg.min_d = 0;
    }
    agg
}

/// Pointwise order on `d` values.
pub fn d_le(a: &Configuration, b: &Configuration) -> bool {
    a.d_values().zip(b.d_values()).all(|(x, y)| x <= y)
}

/// Every `d` replaced by the configuration's minimum.
pub fn bottom_of(cfg: &Configuration) -> Configuration {
    let min = d_aggregates(cfg).min_d;
    cfg.with_d_values(core::iter::repeat(min))
}

/// Upper envelope: the root keeps its value, every other node gets the larger
/// of its own value and one plus the smallest envelope value among its
/// neighbors one hop closer to the root.
pub fn top_of(net: &Network, cfg: &Configuration) -> Configuration {
    let mut top: Vec<u64> = cfg.d_values().collect();
    for &p in net.by_distance() {
        if net.is_root(p) {
            continue;
        }
        let dp = net.dist(p);
        let closer = net
            .neighbors(p)
            .iter()
            .filter(|q| net.dist(**q) + 1 == dp)
            .map(|q| top[q.index()])
            .min()
            .expect("a non-root node has a neighbor closer to the root");
        top[p.index()] = top[p.index()].max(closer + 1);
    }
    cfg.with_d_values(top)
}

/// The box `B(γ0) = { γ | bottom(γ0) ≤_d γ ≤_d top(γ0) }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DBounds {
    pub bot: Configuration,
    pub top: Configuration,
}

impl DBounds {
    pub fn of(net: &Network, origin: &Configuration) -> Self {
        DBounds {
            bot: bottom_of(origin),
            top: top_of(net, origin),
        }
    }

    /// Rank interval `K0 = [min_d bot, max_d top]`.
    pub fn k0(&self) -> (u64, u64) {
        (d_aggregates(&self.bot).min_d, d_aggregates(&self.top).max_d)
    }

    /// Interval of admissible `sum_d` values inside the box.
    pub fn sum_range(&self) -> (u128, u128) {
        (d_aggregates(&self.bot).sum_d, d_aggregates(&self.top).sum_d)
    }
}

pub fn in_box(bounds: &DBounds, cfg: &Configuration) -> bool {
    d_le(&bounds.bot, cfg) && d_le(cfg, &bounds.top)
}

/// Number of CP-enabled nodes.
pub fn cp_count(net: &Network, cfg: &Configuration) -> usize {
    net.nodes()
        .filter(|&p| enabled_action(net, cfg, p) == Some(ActionKind::CP))
        .count()
}

#[inline]
pub fn edge_smooth(cfg: &Configuration, e: Edge) -> bool {
    cfg.d(e.lo()).abs_diff(cfg.d(e.hi())) <= 1
}

#[inline]
pub fn edge_rank(cfg: &Configuration, e: Edge) -> u64 {
    cfg.d(e.lo()).min(cfg.d(e.hi()))
}

fn changed(cfg: &Configuration, next: &Configuration, p: NodeId) -> bool {
    cfg.d(p) != next.d(p)
}

fn require_d_step(
    net: &Network,
    cfg: &Configuration,
    next: &Configuration,
) -> Result<(), PotentialError> {
    match classify_step(cfg, next, net.root()) {
        StepClass::DStep => Ok(()),
        _ => Err(PotentialError::NotADStep),
    }
}

/// A d-step is smooth when every node whose `d` changes is incident only to
/// edges that are smooth before the step.
pub fn step_smooth(
    net: &Network,
    cfg: &Configuration,
    next: &Configuration,
) -> Result<bool, PotentialError> {
    require_d_step(net, cfg, next)?;
    Ok(net
        .edges()
        .iter()
        .all(|&e| edge_smooth(cfg, e) || !(changed(cfg, next, e.lo()) || changed(cfg, next, e.hi()))))
}

/// Smallest rank among edges that are non-smooth before the step and have a
/// moving endpoint, with the first such edge (in canonical order) attaining it.
pub fn k_star(
    net: &Network,
    cfg: &Configuration,
    next: &Configuration,
) -> Result<(u64, Edge), PotentialError> {
    if classify_step(cfg, next, net.root()) != StepClass::DStep {
        return Err(PotentialError::NotNonSmoothDStep);
    }
    let mut best: Option<(u64, Edge)> = None;
    for &e in net.edges() {
        if edge_smooth(cfg, e) || !(changed(cfg, next, e.lo()) || changed(cfg, next, e.hi())) {
            continue;
        }
        let r = edge_rank(cfg, e);
        if best.is_none_or(|(k, _)| r < k) {
            best = Some((r, e));
        }
    }
    best.ok_or(PotentialError::NotNonSmoothDStep)
}

/// A set of edges kept sorted in canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeSet(Vec<Edge>);

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet(Vec::new())
    }

    pub fn from_edges(mut edges: Vec<Edge>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        EdgeSet(edges)
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.0.binary_search(e).is_ok()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.0.iter().all(|e| other.contains(e))
    }

    pub fn is_proper_subset(&self, other: &EdgeSet) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }

    /// Appends an edge that sorts after every current member.
    fn push_sorted(&mut self, e: Edge) {
        debug_assert!(self.0.last().is_none_or(|l| *l < e));
        self.0.push(e);
    }
}

/// Non-smooth edges of rank exactly `k`.
pub fn ns_set(net: &Network, cfg: &Configuration, k: u64) -> EdgeSet {
    let mut out = EdgeSet::new();
    for &e in net.edges() {
        if !edge_smooth(cfg, e) && edge_rank(cfg, e) == k {
            out.push_sorted(e);
        }
    }
    out
}

/// A sequence of edge sets indexed by the dense integer interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RankedEdgeSets {
    lo: u64,
    sets: Vec<EdgeSet>,
}

impl RankedEdgeSets {
    pub fn new(lo: u64, sets: Vec<EdgeSet>) -> Self {
        assert!(!sets.is_empty(), "rank interval must be non-empty");
        RankedEdgeSets { lo, sets }
    }

    pub fn interval(&self) -> (u64, u64) {
        (self.lo, self.lo + self.sets.len() as u64 - 1)
    }

    pub fn get(&self, k: u64) -> Option<&EdgeSet> {
        k.checked_sub(self.lo).and_then(|i| self.sets.get(i as usize))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &EdgeSet)> {
        self.sets.iter().enumerate().map(move |(i, s)| (self.lo + i as u64, s))
    }

    fn check_same_interval(&self, other: &Self) -> Result<(), PotentialError> {
        if self.interval() == other.interval() {
            Ok(())
        } else {
            let (a, b) = self.interval();
            let (c, d) = other.interval();
            Err(PotentialError::K0Mismatch(a, b, c, d))
        }
    }
}

/// `a ≺_setlex b`: equal below some index where `a`'s set is a proper subset
/// of `b`'s.
pub fn setlex_lt(a: &RankedEdgeSets, b: &RankedEdgeSets) -> Result<bool, PotentialError> {
    a.check_same_interval(b)?;
    for (x, y) in a.sets.iter().zip(&b.sets) {
        if x != y {
            return Ok(x.is_proper_subset(y));
        }
    }
    Ok(false)
}

/// `Φ_{γ0}(γ)`: non-smooth edges by rank over `K0`, and the sum of `d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DPotential {
    pub ns_by_rank: RankedEdgeSets,
    pub sum_d: u128,
}

/// Evaluates `Φ_{γ0}` on `cfg`, where `bounds` was built from `γ0`.
///
/// Non-smooth edges whose rank falls outside `K0` are not represented; that
/// only happens when `cfg` lies outside the box.
pub fn d_potential(net: &Network, bounds: &DBounds, cfg: &Configuration) -> DPotential {
    let (lo, hi) = bounds.k0();
    let mut sets = vec![EdgeSet::new(); (hi - lo + 1) as usize];
    for &e in net.edges() {
        if edge_smooth(cfg, e) {
            continue;
        }
        let r = edge_rank(cfg, e);
        if (lo..=hi).contains(&r) {
            sets[(r - lo) as usize].push_sorted(e);
        }
    }
    DPotential {
        ns_by_rank: RankedEdgeSets::new(lo, sets),
        sum_d: d_aggregates(cfg).sum_d,
    }
}

/// `a ≺_d b`. A larger sum is the smaller potential.
pub fn d_potential_lt(a: &DPotential, b: &DPotential) -> Result<bool, PotentialError> {
    if setlex_lt(&a.ns_by_rank, &b.ns_by_rank)? {
        return Ok(true);
    }
    Ok(a.ns_by_rank == b.ns_by_rank && b.sum_d < a.sum_d)
}

/// The three-layer measure attached to a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeMeasure {
    pub root_d: u64,
    pub d_pot: DPotential,
    pub cp: usize,
}

impl CompositeMeasure {
    /// Measures `cfg` against the box built from some origin `γ0`.
    pub fn measure(net: &Network, bounds: &DBounds, cfg: &Configuration) -> Self {
        CompositeMeasure {
            root_d: cfg.d(net.root()),
            d_pot: d_potential(net, bounds, cfg),
            cp: cp_count(net, cfg),
        }
    }
}

/// Layered lexicographic order on measures.
///
/// `same_phase` states that both potentials were computed against a common
/// box; without it the middle layer is not comparable and is skipped.
pub fn composite_lt(m1: &CompositeMeasure, m2: &CompositeMeasure, same_phase: bool) -> bool {
    if m1.root_d != m2.root_d {
        return m1.root_d < m2.root_d;
    }
    if same_phase && d_potential_lt(&m1.d_pot, &m2.d_pot).unwrap_or(false) {
        return true;
    }
    m1.d_pot == m2.d_pot && m1.cp < m2.cp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithm::apply_step;
    use crate::topology::{generate, Shape};

    const R: NodeId = NodeId(0);
    const A: NodeId = NodeId(1);
    const B: NodeId = NodeId(2);

    fn p3() -> Network {
        generate(Shape::Path, 3).unwrap()
    }

    fn cfg(net: &Network, d: &[u64]) -> Configuration {
        Configuration::with_first_parents(net, d).unwrap()
    }

    fn ds(c: &Configuration) -> Vec<u64> {
        c.d_values().collect()
    }

    fn e(a: u32, b: u32) -> Edge {
        Edge::new(NodeId(a), NodeId(b))
    }

    #[test]
    fn aggregates() {
        let net = p3();
        assert_eq!(
            d_aggregates(&cfg(&net, &[3, 0, 5])),
            DAggregates { min_d: 0, max_d: 5, sum_d: 8 }
        );
        assert_eq!(
            d_aggregates(&cfg(&net, &[0, 0, 0])),
            DAggregates { min_d: 0, max_d: 0, sum_d: 0 }
        );
        assert_eq!(
            d_aggregates(&cfg(&net, &[0, 1, 2])),
            DAggregates { min_d: 0, max_d: 2, sum_d: 3 }
        );
    }

    #[test]
    fn pointwise_order() {
        let net = p3();
        assert!(d_le(&cfg(&net, &[0, 0, 0]), &cfg(&net, &[3, 0, 5])));
        assert!(!d_le(&cfg(&net, &[1, 0, 0]), &cfg(&net, &[0, 5, 5])));
        assert!(!d_le(&cfg(&net, &[0, 5, 5]), &cfg(&net, &[1, 0, 0])));
        let c = cfg(&net, &[2, 7, 1]);
        assert!(d_le(&c, &c));
    }

    #[test]
    fn bottom_and_top() {
        let net = p3();
        assert_eq!(ds(&bottom_of(&cfg(&net, &[3, 0, 5]))), [0, 0, 0]);
        assert_eq!(ds(&bottom_of(&cfg(&net, &[2, 2, 2]))), [2, 2, 2]);
        let p2 = generate(Shape::Path, 2).unwrap();
        assert_eq!(ds(&bottom_of(&cfg(&p2, &[0, 7]))), [0, 0]);

        assert_eq!(ds(&top_of(&net, &cfg(&net, &[3, 0, 5]))), [3, 4, 5]);
        assert_eq!(ds(&top_of(&net, &cfg(&net, &[0, 1, 2]))), [0, 1, 2]);
        assert_eq!(ds(&top_of(&p2, &cfg(&p2, &[0, 0]))), [0, 1]);

        let c = Configuration::with_parents(&net, &[3, 0, 5], &[]).unwrap();
        assert_eq!(top_of(&net, &c).par(A), c.par(A));
    }

    #[test]
    fn box_membership() {
        let net = p3();
        let g0 = cfg(&net, &[3, 0, 5]);
        let b = DBounds::of(&net, &g0);
        assert!(in_box(&b, &g0));
        assert!(in_box(&b, &cfg(&net, &[0, 4, 5])));
        assert!(!in_box(&b, &cfg(&net, &[4, 0, 5])));
        assert_eq!(b.k0(), (0, 5));
        assert_eq!(b.sum_range(), (0, 12));
    }

    #[test]
    fn cp_counts() {
        let net = p3();
        let c = Configuration::with_parents(&net, &[0, 1, 2], &[(A, B)]).unwrap();
        assert_eq!(cp_count(&net, &c), 1);
        let c = Configuration::with_parents(&net, &[0, 1, 2], &[(A, R)]).unwrap();
        assert_eq!(cp_count(&net, &c), 0);
        assert_eq!(cp_count(&net, &cfg(&net, &[3, 0, 5])), 0);
    }

    #[test]
    fn smooth_and_rank() {
        let net = p3();
        let c = cfg(&net, &[3, 0, 5]);
        assert!(!edge_smooth(&c, e(0, 1)));
        assert_eq!(edge_rank(&c, e(0, 1)), 0);
        let c = cfg(&net, &[0, 1, 2]);
        assert!(edge_smooth(&c, e(1, 2)));
        assert_eq!(edge_rank(&c, e(2, 1)), 1);
        let c = cfg(&net, &[4, 4, 4]);
        assert!(edge_smooth(&c, e(0, 1)));
    }

    #[test]
    fn smooth_steps() {
        let net = p3();
        let a = cfg(&net, &[0, 0, 0]);
        let b = apply_step(&net, &a, &[A, B]).unwrap();
        assert_eq!(step_smooth(&net, &a, &b), Ok(true));

        let a = cfg(&net, &[0, 5, 1]);
        let b = apply_step(&net, &a, &[B]).unwrap();
        assert_eq!(step_smooth(&net, &a, &b), Ok(false));

        let a = Configuration::with_parents(&net, &[0, 1, 2], &[(A, B)]).unwrap();
        let b = apply_step(&net, &a, &[A]).unwrap();
        assert_eq!(step_smooth(&net, &a, &b), Err(PotentialError::NotADStep));
    }

    #[test]
    fn k_star_examples() {
        let net = p3();
        let a = cfg(&net, &[0, 5, 1]);
        let b = apply_step(&net, &a, &[B]).unwrap();
        assert_eq!(k_star(&net, &a, &b), Ok((1, e(1, 2))));

        let b = apply_step(&net, &a, &[A]).unwrap();
        assert_eq!(ds(&b), [0, 1, 1]);
        assert_eq!(k_star(&net, &a, &b), Ok((0, e(0, 1))));

        let a = cfg(&net, &[0, 0, 0]);
        let b = apply_step(&net, &a, &[A, B]).unwrap();
        assert_eq!(k_star(&net, &a, &b), Err(PotentialError::NotNonSmoothDStep));
    }

    #[test]
    fn ns_sets() {
        let net = p3();
        let c = cfg(&net, &[3, 0, 5]);
        assert_eq!(ns_set(&net, &c, 0), EdgeSet::from_edges(vec![e(0, 1), e(1, 2)]));
        assert!(ns_set(&net, &c, 7).is_empty());
    }

    #[test]
    fn potential_examples() {
        let net = p3();
        let g0 = cfg(&net, &[3, 0, 5]);
        let bounds = DBounds::of(&net, &g0);
        let phi = d_potential(&net, &bounds, &g0);
        assert_eq!(phi.ns_by_rank.interval(), (0, 5));
        assert_eq!(phi.ns_by_rank.get(0).unwrap().as_slice(), &[e(0, 1), e(1, 2)]);
        assert!((1..=5).all(|k| phi.ns_by_rank.get(k).unwrap().is_empty()));
        assert_eq!(phi.sum_d, 8);

        let legit = Configuration::with_parents(&net, &[0, 1, 2], &[(A, R)]).unwrap();
        let phi = d_potential(&net, &DBounds::of(&net, &legit), &legit);
        assert!(phi.ns_by_rank.iter().all(|(_, s)| s.is_empty()));
        assert_eq!(phi.sum_d, 3);

        let other = Configuration::with_parents(&net, &[0, 1, 2], &[(A, B)]).unwrap();
        let bounds = DBounds::of(&net, &legit);
        assert_eq!(d_potential(&net, &bounds, &legit), d_potential(&net, &bounds, &other));
    }

    #[test]
    fn orders() {
        let base = vec![EdgeSet::new(), EdgeSet::new(), EdgeSet::new()];
        let mut with = base.clone();
        with[1] = EdgeSet::from_edges(vec![e(1, 2)]);
        let a = RankedEdgeSets::new(0, base);
        let b = RankedEdgeSets::new(0, with);
        assert_eq!(setlex_lt(&a, &b), Ok(true));
        assert_eq!(setlex_lt(&b, &a), Ok(false));
        assert_eq!(setlex_lt(&a, &a), Ok(false));

        let pa = DPotential { ns_by_rank: a.clone(), sum_d: 2 };
        let pb = DPotential { ns_by_rank: a.clone(), sum_d: 0 };
        assert_eq!(d_potential_lt(&pa, &pb), Ok(true));
        assert_eq!(d_potential_lt(&pb, &pa), Ok(false));
        assert_eq!(d_potential_lt(&pa, &pa), Ok(false));

        let shifted = RankedEdgeSets::new(1, vec![EdgeSet::new(); 3]);
        assert_eq!(setlex_lt(&a, &shifted), Err(PotentialError::K0Mismatch(0, 2, 1, 3)));
    }

    #[test]
    fn incomparable_sets_are_not_ordered() {
        let x = RankedEdgeSets::new(0, vec![EdgeSet::from_edges(vec![e(0, 1)])]);
        let y = RankedEdgeSets::new(0, vec![EdgeSet::from_edges(vec![e(1, 2)])]);
        assert_eq!(setlex_lt(&x, &y), Ok(false));
        assert_eq!(setlex_lt(&y, &x), Ok(false));
    }

    #[test]
    fn composite_layers() {
        let net = p3();
        let src = cfg(&net, &[3, 0, 5]);
        let dst = apply_step(&net, &src, &[R, A]).unwrap();
        assert_eq!(ds(&dst), [0, 4, 5]);
        let bounds = DBounds::of(&net, &src);
        let m_src = CompositeMeasure::measure(&net, &bounds, &src);
        let m_dst = CompositeMeasure::measure(&net, &DBounds::of(&net, &dst), &dst);
        assert!(composite_lt(&m_dst, &m_src, false));

        let src = Configuration::with_parents(&net, &[0, 1, 2], &[(A, B)]).unwrap();
        let dst = apply_step(&net, &src, &[A]).unwrap();
        let bounds = DBounds::of(&net, &src);
        let m_src = CompositeMeasure::measure(&net, &bounds, &src);
        let m_dst = CompositeMeasure::measure(&net, &bounds, &dst);
        assert_eq!(m_src.d_pot, m_dst.d_pot);
        assert!(composite_lt(&m_dst, &m_src, true));
        assert!(!composite_lt(&m_src, &m_dst, true));

        let src = cfg(&net, &[0, 5, 1]);
        let dst = apply_step(&net, &src, &[B]).unwrap();
        let bounds = DBounds::of(&net, &src);
        let m_src = CompositeMeasure::measure(&net, &bounds, &src);
        let m_dst = CompositeMeasure::measure(&net, &bounds, &dst);
        assert_eq!(m_src.d_pot.ns_by_rank.get(1).unwrap().as_slice(), &[e(1, 2)]);
        assert!(m_dst.d_pot.ns_by_rank.get(1).unwrap().is_empty());
        assert!(composite_lt(&m_dst, &m_src, true));
    }
}
