//! Harnesses showing how the approximation fails when its convergence
//! hypotheses do not hold: a barrier tangency, a capped Bessel(3)
//! process, and the rate of strong convergence of a piecewise-constant
//! Brownian path.

use std::sync::Arc;

use crate::analytic::{bessel3_mean, bessel3_reciprocal_mean};
use crate::error::Result;
use crate::estimator::{estimate_source, reduce_paths, Estimate};
use crate::functionals::{FunctionalSpec, TerminalKind, TerminalPayoff};
use crate::models::SdeModel;
use crate::path::{classify_c_partition, default_touch_tolerance, hitting_time, BarrierPair, CPartition, StepPath};
use crate::rng::RngStream;
use crate::schemes::{PathSource, SchemeConfig, SchemeKind, SchemeSimulator};

/// Grid size of the tangency paths; contains `s = 1/2`.
pub const TANGENCY_GRID: usize = 1000;

/// `X(s) = 1 - (s - 1/2)^2` sampled on `i / n`.
pub fn tangency_path(n: usize) -> Result<StepPath> {
    StepPath::sample_fn(n, |s| 1.0 - (s - 0.5) * (s - 0.5))
}

/// Deterministic "scheme" `X^h = X - h`, which converges uniformly to the
/// tangent path but never reaches the barrier 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyPseudoScheme {
    pub h: f64,
    pub grid: usize,
}

impl TangencyPseudoScheme {
    pub fn new(h: f64) -> Self {
        Self { h, grid: TANGENCY_GRID }
    }
}

impl PathSource for TangencyPseudoScheme {
    fn h(&self) -> f64 {
        self.h
    }

    fn simulate(&self, _stream: RngStream) -> Result<StepPath> {
        Ok(tangency_path(self.grid)?.shifted(-self.h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangencyReport {
    /// Exit time of the limit path through `beta = 1`.
    pub tau: f64,
    /// `(h, tau^h)` for each perturbed path.
    pub rows: Vec<(f64, f64)>,
    pub class: CPartition,
}

pub fn counterexample_tangency() -> Result<TangencyReport> {
    let barriers = BarrierPair::upper_only(1.0)?;
    let x = tangency_path(TANGENCY_GRID)?;
    let tau = hitting_time(&x, &barriers)?;
    let class = classify_c_partition(&x, &barriers, default_touch_tolerance(1.0))?;
    let rows = [0.1, 0.01, 0.001]
        .into_iter()
        .map(|h| Ok((h, hitting_time(&TangencyPseudoScheme::new(h).simulate(RngStream::new(0, 0))?, &barriers)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TangencyReport { tau, rows, class })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselRow {
    pub h: f64,
    pub cap: Option<f64>,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesselReport {
    pub x0: f64,
    /// Terminal means of the Euler chain capped at `1/h`.
    pub rows: Vec<BesselRow>,
    /// Uncapped chain at the largest `h`.
    pub uncapped: BesselRow,
    /// `E[X(1)]` by quadrature of the transition density.
    pub oracle: f64,
    /// `E[1 / X(1)]` by the same quadrature.
    pub reciprocal_oracle: f64,
}

fn terminal_value_spec() -> Result<FunctionalSpec> {
    let g = TerminalPayoff { kind: TerminalKind::Value, strike: 0.0, r: 0.0 };
    FunctionalSpec::uniform(1, Arc::new(g), BarrierPair::unbounded())
}

/// Euler chain for `dX = dt / X + dW` from 1, capped at `1/h` after every
/// step, against the quadrature value of `E[X(1)]`.
pub fn counterexample_bessel(h_grid: &[f64], n_paths: usize, seed: u64, workers: usize) -> Result<BesselReport> {
    let x0 = 1.0;
    let model = SdeModel::bessel3(x0)?;
    let spec = terminal_value_spec()?;
    let run = |h: f64, cap: Option<f64>| -> Result<BesselRow> {
        let mut cfg = SchemeConfig::new(SchemeKind::Euler, h);
        if let Some(c) = cap {
            cfg = cfg.with_cap(c);
        }
        let sim = SchemeSimulator::new(model.clone(), cfg)?;
        Ok(BesselRow { h, cap, estimate: estimate_source(&sim, &spec, n_paths, seed, workers)? })
    };
    let rows = h_grid.iter().map(|&h| run(h, Some(1.0 / h))).collect::<Result<Vec<_>>>()?;
    let moderate = h_grid.iter().copied().fold(0.0, f64::max);
    let uncapped = run(moderate, None)?;
    Ok(BesselReport {
        x0,
        rows,
        uncapped,
        oracle: bessel3_mean(x0),
        reciprocal_oracle: bessel3_reciprocal_mean(x0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongRow {
    pub n: usize,
    /// Monte Carlo estimate of `sqrt(N) E[sup_t |W(t) - W(floor(N t) / N)|]`.
    pub scaled_error: f64,
    pub stderr: f64,
    /// `sqrt(2 log N)`, the growth rate of the scaled error.
    pub trend: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongReport {
    pub substeps: usize,
    pub rows: Vec<StrongRow>,
    /// Scaled errors strictly increase with `N`.
    pub increasing: bool,
}

/// Fine Brownian substeps per coarse interval.
pub const STRONG_SUBSTEPS: usize = 32;

/// Sup distance between a Brownian path and its piecewise-constant
/// interpolation on `N` intervals, scaled by `sqrt(N)`. The Brownian path is
/// sampled on a grid `STRONG_SUBSTEPS` times finer.
pub fn counterexample_strong(ns: &[usize], n_paths: usize, seed: u64, workers: usize) -> Result<StrongReport> {
    let rows = ns
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let fine_sd = (1.0 / (n * STRONG_SUBSTEPS) as f64).sqrt();
            let stats = reduce_paths(n_paths, workers, |i| {
                let mut noise = RngStream::new(seed.wrapping_add(idx as u64), i).noise(1);
                let mut sup = 0.0f64;
                for _ in 0..n {
                    // offset from the value at the start of the interval
                    let mut w = 0.0f64;
                    for _ in 0..STRONG_SUBSTEPS {
                        w += fine_sd * noise.normal(0);
                        sup = sup.max(w.abs());
                    }
                }
                Ok((n as f64).sqrt() * sup)
            })?;
            Ok(StrongRow {
                n,
                scaled_error: stats.mean,
                stderr: stats.stderr(),
                trend: (2.0 * (n as f64).ln()).sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let increasing = rows.windows(2).all(|w| w[1].scaled_error > w[0].scaled_error);
    Ok(StrongReport { substeps: STRONG_SUBSTEPS, rows, increasing })
}
