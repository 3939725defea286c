//! Discrete-event simulator of a multi-cell radio access network with MEC
//! servers co-located at base-station sectors, comparing computation-aware
//! handoff against signal-only baselines.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod batch;
pub mod engine;
pub mod geometry;
pub mod handoff;
pub mod mec;
pub mod metrics;
pub mod mobility;
pub mod radio;
pub mod scenario;
pub mod sim;

pub use handoff::Algorithm;
pub use scenario::Scenario;
pub use sim::{run_once, RunOptions, RunOutput};
