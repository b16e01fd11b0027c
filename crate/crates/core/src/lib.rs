//! Monte Carlo evaluation of path functionals of diffusions approximated
//! by Markov chains.
//!
//! A functional combines a payoff `g` with projections of a path `x` and its
//! running maximum `x*`, both stopped at the first exit time `tau` from a
//! barrier band:
//!
//! `G(x) = g(Pi(x, tau nu1), Pi(x, nu2), Pi(x*, tau nu3), Pi(x*, nu4), tau)`.
//!
//! The crate simulates chains ([`schemes`]), evaluates `G` on their
//! piecewise-constant interpolations ([`functionals`]), averages over
//! reproducible random streams ([`estimator`]) and provides diagnostics for
//! the conditions under which `E[G(X^h)] -> E[G(X)]`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod counterexamples;
pub mod error;
pub mod estimator;
pub mod functionals;
pub mod models;
pub mod path;
pub mod rng;
pub mod schemes;
pub mod skorohod;

pub use error::{Error, Result};
pub use estimator::{
    convergence_study, convergence_study_sources, estimate, estimate_source, estimate_with, ui_diagnostic,
    ConvergenceReport, ConvergenceRow, Estimate, Oracle, RunOptions, StudyOptions, UiReport,
};
pub use functionals::{
    evaluate, observe, payoff_discrete_barrier_call, payoff_up_and_in_call, FunctionalSpec, Growth, Payoff,
    PathObservables,
};
pub use models::{probe_a5, SdeModel, StochVolModel, TimeFn, VolFn};
pub use path::{
    classify_c_partition, hitting_time, project, running_max, Barrier, BarrierPair, CPartition, SampleVector,
    StepPath,
};
pub use rng::{Noise, RngStream};
pub use schemes::{
    check_local_consistency, simulate_path, PathSource, SchemeConfig, SchemeKind, SchemeSimulator,
};
pub use skorohod::{skorohod_distance_approx, TimeChange};
