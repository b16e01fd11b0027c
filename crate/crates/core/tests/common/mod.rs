#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use pathfunc_core::StepPath;

/// Master seed shared by every property suite.
pub const MASTER_SEED: u64 = 0x5eed_2024;

pub fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(MASTER_SEED),
        failure_persistence: None,
        ..Config::default()
    }
}

/// Grid `0 = t_0 < ... < t_n = 1` from positive weights.
pub fn grid_from(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut times = vec![0.0];
    let mut acc = 0.0;
    for w in &weights[..weights.len() - 1] {
        acc += w;
        let t = acc / total;
        if t > *times.last().unwrap() && t < 1.0 {
            times.push(t);
        }
    }
    times.push(1.0);
    times
}

/// Scalar step path with up to `max_steps` steps and values in `[-3, 3]`.
pub fn arb_path(max_steps: usize) -> impl Strategy<Value = StepPath> {
    prop::collection::vec((0.05f64..1.0, -3.0f64..3.0), 1..=max_steps).prop_map(|steps| {
        let weights: Vec<f64> = steps.iter().map(|s| s.0).collect();
        let times = grid_from(&weights);
        let mut values: Vec<f64> = steps.iter().map(|s| s.1).collect();
        values.resize(times.len(), values[values.len() - 1]);
        values.truncate(times.len());
        StepPath::scalar(times, values).unwrap()
    })
}

/// Extra grid points for refinement tests.
pub fn arb_extra() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 0..10)
}
