//! Self-stabilizing BFS spanning tree construction in the atomic-state
//! model, with an exhaustive small-scope checker for its convergence under
//! the unfair daemon.
//!
//! The crate is `no_std` and only needs `alloc`. IO, file formats and the
//! command-line front end live in the `stabilis` crate.

#![no_std]

extern crate alloc;

pub mod algorithm;
pub mod checker;
pub mod daemons;
pub mod potentials;
pub mod topology;

pub use algorithm::{ActionKind, Configuration, NodeState, StepClass};
pub use checker::{Check, Limits, MonitorReport, StepGraph};
pub use daemons::{DaemonStrategy, Outcome, StrategyKind, Trace, TraceStep};
pub use potentials::{CompositeMeasure, DBounds, DPotential, EdgeSet};
pub use topology::{Edge, Network, NodeId, Shape};
