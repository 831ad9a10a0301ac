//! Agent-based simulation of an employment market in which only some
//! employers enforce demographic parity in hiring.

pub mod cli;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod presets;
pub mod report;
pub mod sampling;
pub mod strategy;
