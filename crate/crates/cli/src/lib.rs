//! Experiment driver for the chebpint parallel-in-time solver.

pub mod args;
pub mod error;
pub mod experiments;
pub mod report;
