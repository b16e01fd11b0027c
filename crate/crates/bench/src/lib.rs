//! Shared fixtures for the engine benchmarks.

use std::sync::Arc;

use pathfunc_core::functionals::{payoff_discrete_barrier_call, TerminalKind, TerminalPayoff};
use pathfunc_core::{BarrierPair, FunctionalSpec, SdeModel, StepPath};

/// Geometric Brownian motion with the barrier-option parameters.
pub fn gbm() -> SdeModel {
    SdeModel::gbm(0.1, 0.3, 0.8).expect("valid parameters")
}

/// Monthly monitored up-and-in call, strike 1/2, barrier 1.
pub fn discrete_barrier_spec() -> FunctionalSpec {
    let g = payoff_discrete_barrier_call(0.5, 1.0, 0.1, 12).expect("valid payoff");
    FunctionalSpec::uniform(12, g, BarrierPair::unbounded()).expect("valid spec")
}

pub fn terminal_spec() -> FunctionalSpec {
    let g = TerminalPayoff { kind: TerminalKind::Value, strike: 0.0, r: 0.0 };
    FunctionalSpec::uniform(1, Arc::new(g), BarrierPair::unbounded()).expect("valid spec")
}

/// Deterministic wiggly path with `n` steps.
pub fn wiggle(n: usize, phase: f64) -> StepPath {
    StepPath::sample_fn(n, |t| (12.0 * t + phase).sin() + 0.3 * (40.0 * t).cos()).expect("valid path")
}
