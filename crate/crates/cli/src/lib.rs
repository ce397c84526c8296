//! Experiment runner behind the `rmt-edge` binary.

pub mod config;
pub mod diff;
pub mod experiments;
pub mod report;
