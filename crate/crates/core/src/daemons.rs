//! Daemons (activation strategies) and the execution driver.
//!
//! Every strategy honors the unfair-daemon contract: given the enabled nodes
//! it returns some non-empty subset of them. Nothing here enforces fairness.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithm::{
    apply_step, classify_step, enabled_nodes, is_terminal, AlgorithmError, Configuration,
    StepClass,
};
use crate::topology::{Network, NodeId};

/// Upper bound on the candidate subsets the greedy adversary evaluates per
/// step.
pub const GREEDY_SAMPLE_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DaemonError {
    #[error("strategy {strategy} violated the daemon contract at step {step}")]
    StrategyContractViolation { strategy: String, step: usize },
    #[error("planned activation {index} is not a non-empty subset of the enabled nodes")]
    PlanStepIllegal { index: usize },
    #[error(transparent)]
    Step(#[from] AlgorithmError),
}

/// An activation strategy.
pub trait DaemonStrategy {
    fn name(&self) -> String;

    /// Chooses the nodes to activate. `enabled` is non-empty and sorted.
    ///
    /// Returning `Ok(None)` stops the execution early, which only scripted
    /// plans do once they run out.
    fn select(
        &mut self,
        net: &Network,
        cfg: &Configuration,
        enabled: &[NodeId],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError>;
}

/// Activates every enabled node.
#[derive(Debug, Default, Clone)]
pub struct Synchronous;

impl DaemonStrategy for Synchronous {
    fn name(&self) -> String {
        "synchronous".into()
    }

    fn select(
        &mut self,
        _: &Network,
        _: &Configuration,
        enabled: &[NodeId],
        _: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        Ok(Some(enabled.to_vec()))
    }
}

/// Activates the enabled node with the smallest identifier.
#[derive(Debug, Default, Clone)]
pub struct CentralFirst;

impl DaemonStrategy for CentralFirst {
    fn name(&self) -> String {
        "central_first".into()
    }

    fn select(
        &mut self,
        _: &Network,
        _: &Configuration,
        enabled: &[NodeId],
        _: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        Ok(Some(enabled[..1].to_vec()))
    }
}

/// Activates one enabled node chosen uniformly.
#[derive(Debug, Default, Clone)]
pub struct CentralRandom;

impl DaemonStrategy for CentralRandom {
    fn name(&self) -> String {
        "central_random".into()
    }

    fn select(
        &mut self,
        _: &Network,
        _: &Configuration,
        enabled: &[NodeId],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        Ok(Some(alloc::vec![enabled[rng.gen_range(0..enabled.len())]]))
    }
}

/// Includes each enabled node independently with probability `p`; falls back
/// to a single uniform choice when nothing was drawn.
#[derive(Debug, Clone)]
pub struct RandomSubset {
    pub p: f64,
}

impl DaemonStrategy for RandomSubset {
    fn name(&self) -> String {
        alloc::format!("random_subset:{}", self.p)
    }

    fn select(
        &mut self,
        _: &Network,
        _: &Configuration,
        enabled: &[NodeId],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        let p = self.p.clamp(0.0, 1.0);
        let mut chosen: Vec<NodeId> = enabled.iter().copied().filter(|_| rng.gen_bool(p)).collect();
        if chosen.is_empty() {
            chosen.push(enabled[rng.gen_range(0..enabled.len())]);
        }
        Ok(Some(chosen))
    }
}

/// Heuristic step-count stretcher: among at most [`GREEDY_SAMPLE_LIMIT`]
/// candidate subsets, picks the one whose successor has the most enabled
/// nodes (first candidate wins ties).
///
/// Candidates are all non-empty subsets in bitmask order when they fit in the
/// limit, random non-empty subsets otherwise.
#[derive(Debug, Default, Clone)]
pub struct GreedyAdversary;

impl GreedyAdversary {
    fn candidates(enabled: &[NodeId], rng: &mut dyn RngCore) -> Vec<Vec<NodeId>> {
        let k = enabled.len();
        let pick = |mask: u64| -> Vec<NodeId> {
            enabled
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &p)| p)
                .collect()
        };
        if k < 9 {
            (1u64..(1 << k)).map(pick).collect()
        } else {
            (0..GREEDY_SAMPLE_LIMIT)
                .map(|_| {
                    let mut set: Vec<NodeId> =
                        enabled.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                    if set.is_empty() {
                        set.push(enabled[rng.gen_range(0..k)]);
                    }
                    set
                })
                .collect()
        }
    }
}

impl DaemonStrategy for GreedyAdversary {
    fn name(&self) -> String {
        "greedy_adversary".into()
    }

    fn select(
        &mut self,
        net: &Network,
        cfg: &Configuration,
        enabled: &[NodeId],
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        let mut best: Option<(usize, Vec<NodeId>)> = None;
        for set in Self::candidates(enabled, rng) {
            let next = apply_step(net, cfg, &set)?;
            let score = enabled_nodes(net, &next).len();
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, set));
            }
        }
        Ok(best.map(|(_, set)| set))
    }
}

/// Replays a fixed activation plan, then stops.
#[derive(Debug, Clone)]
pub struct Scripted {
    plan: Vec<Vec<NodeId>>,
    cursor: usize,
}

impl Scripted {
    pub fn new(plan: Vec<Vec<NodeId>>) -> Self {
        Scripted { plan, cursor: 0 }
    }
}

impl DaemonStrategy for Scripted {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn select(
        &mut self,
        _: &Network,
        _: &Configuration,
        enabled: &[NodeId],
        _: &mut dyn RngCore,
    ) -> Result<Option<Vec<NodeId>>, DaemonError> {
        let Some(set) = self.plan.get(self.cursor) else {
            return Ok(None);
        };
        let index = self.cursor;
        if !is_activation_of(set, enabled) {
            return Err(DaemonError::PlanStepIllegal { index });
        }
        self.cursor += 1;
        Ok(Some(set.clone()))
    }
}

/// Whether `set` is a non-empty, duplicate-free subset of `enabled`.
fn is_activation_of(set: &[NodeId], enabled: &[NodeId]) -> bool {
    !set.is_empty()
        && set.iter().enumerate().all(|(i, p)| enabled.contains(p) && !set[..i].contains(p))
}

/// Names of the built-in strategies.
#[derive(Debug, Clone, PartialEq)]
pub enum StrategyKind {
    Synchronous,
    CentralFirst,
    CentralRandom,
    RandomSubset(f64),
    GreedyAdversary,
    Scripted(Vec<Vec<NodeId>>),
}

impl StrategyKind {
    pub fn build(&self) -> Box<dyn DaemonStrategy> {
        match self {
            StrategyKind::Synchronous => Box::new(Synchronous),
            StrategyKind::CentralFirst => Box::new(CentralFirst),
            StrategyKind::CentralRandom => Box::new(CentralRandom),
            StrategyKind::RandomSubset(p) => Box::new(RandomSubset { p: *p }),
            StrategyKind::GreedyAdversary => Box::new(GreedyAdversary),
            StrategyKind::Scripted(plan) => Box::new(Scripted::new(plan.clone())),
        }
    }
}

/// Every built-in strategy; `random_subset` uses `p`, `scripted` replays `plan`.
pub fn builtin_strategies(p: f64, plan: Vec<Vec<NodeId>>) -> Vec<StrategyKind> {
    alloc::vec![
        StrategyKind::Synchronous,
        StrategyKind::CentralFirst,
        StrategyKind::CentralRandom,
        StrategyKind::RandomSubset(p),
        StrategyKind::GreedyAdversary,
        StrategyKind::Scripted(plan),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    /// Activated nodes, sorted.
    pub activated: Vec<NodeId>,
    pub class: StepClass,
    pub config: Configuration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Terminated,
    /// The run stopped after this many steps without reaching a terminal
    /// configuration.
    Truncated(usize),
}

/// A finite execution prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Configuration,
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
}

impl Trace {
    pub fn last(&self) -> &Configuration {
        self.steps.last().map_or(&self.initial, |s| &s.config)
    }

    /// Number of root, d and par steps.
    pub fn class_tally(&self) -> [usize; 3] {
        let mut tally = [0; 3];
        for s in &self.steps {
            tally[s.class as usize] += 1;
        }
        tally
    }
}

/// Runs the algorithm under `strategy` until a terminal configuration or
/// `max_steps` steps. Deterministic in its inputs and `seed`.
pub fn run_execution(
    net: &Network,
    initial: &Configuration,
    strategy: &mut dyn DaemonStrategy,
    max_steps: usize,
    seed: u64,
) -> Result<Trace, DaemonError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut current = initial.clone();
    let outcome = loop {
        let enabled = enabled_nodes(net, &current);
        if enabled.is_empty() {
            break Outcome::Terminated;
        }
        if steps.len() >= max_steps {
            break Outcome::Truncated(steps.len());
        }
        let Some(mut activated) = strategy.select(net, &current, &enabled, &mut rng)? else {
            break Outcome::Truncated(steps.len());
        };
        if !is_activation_of(&activated, &enabled) {
            return Err(DaemonError::StrategyContractViolation {
                strategy: strategy.name(),
                step: steps.len(),
            });
        }
        activated.sort_unstable();
        let next = apply_step(net, &current, &activated)?;
        let class = classify_step(&current, &next, net.root());
        steps.push(TraceStep {
            activated,
            class,
            config: next.clone(),
        });
        current = next;
    };
    Ok(Trace {
        initial: initial.clone(),
        steps,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("step {0} is not reproduced by its activation set")]
    IllegalStep(usize),
    #[error("step {0} carries the wrong class")]
    WrongClass(usize),
    #[error("trace is marked terminated but its last configuration is not terminal")]
    NotMaximal,
}

/// Replays a trace. Step indices in errors are zero-based.
pub fn validate_trace(net: &Network, trace: &Trace) -> Result<(), TraceError> {
    let mut prev = &trace.initial;
    for (i, step) in trace.steps.iter().enumerate() {
        match apply_step(net, prev, &step.activated) {
            Ok(next) if next == step.config => {}
            _ => return Err(TraceError::IllegalStep(i)),
        }
        if classify_step(prev, &step.config, net.root()) != step.class {
            return Err(TraceError::WrongClass(i));
        }
        prev = &step.config;
    }
    if trace.outcome == Outcome::Terminated && !is_terminal(net, prev) {
        return Err(TraceError::NotMaximal);
    }
    Ok(())
}
