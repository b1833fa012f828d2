//! Scenario simulation, clustering metrics and posterior predictive checks.

pub mod metrics;
pub mod ppc;
pub mod scenario;
pub mod schieber;
