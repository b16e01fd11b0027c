//! Empirical check of local consistency: conditional increment mean and
//! covariance of the chain against `b dt` and `sigma sigma' dt`, plus
//! quasi-uniformity of the observed step durations.

use super::{ChainStep, SchemeConfig, TransitionKernel};
use crate::error::Result;
use crate::models::SdeModel;
use crate::rng::RngStream;

/// Standard errors allowed before a residual counts as a violation.
pub const CONSISTENCY_SE_MULTIPLIER: f64 = 4.0;

/// Outcome at one probe point `(y, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub y: Vec<f64>,
    pub t: f64,
    /// Moments were computed by enumerating a finite support.
    pub exact: bool,
    pub mean_dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// `(E[dY] - E[dt] b) / E[dt]`, one entry per state coordinate.
    pub r1: Vec<f64>,
    pub r1_se: Vec<f64>,
    /// `(cov(dY) - E[dt] sigma sigma') / E[dt]`, row-major `d x d`.
    pub r2: Vec<f64>,
    pub r2_se: Vec<f64>,
    pub lc1_pass: bool,
    pub lc2_pass: bool,
    pub qu_pass: bool,
}

impl ProbeResult {
    pub fn pass(&self) -> bool {
        self.lc1_pass && self.lc2_pass && self.qu_pass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub h: f64,
    /// Consistency constant `C`: residuals may reach `C h` plus noise.
    pub c: f64,
    pub n_draws: usize,
    pub probes: Vec<ProbeResult>,
    pub pass: bool,
}

/// Checks a scheme configuration at the given probe points.
pub fn check_local_consistency(
    model: &SdeModel,
    config: &SchemeConfig,
    probes: &[(Vec<f64>, f64)],
    n_draws: usize,
    seed: u64,
    c: f64,
) -> Result<ConsistencyReport> {
    config.validate(model)?;
    check_kernel_consistency(model, config, probes, n_draws, seed, c)
}

/// Same as [`check_local_consistency`] for an arbitrary kernel.
pub fn check_kernel_consistency(
    model: &SdeModel,
    kernel: &dyn TransitionKernel,
    probes: &[(Vec<f64>, f64)],
    n_draws: usize,
    seed: u64,
    c: f64,
) -> Result<ConsistencyReport> {
    let h = kernel.h();
    let mut results = Vec::with_capacity(probes.len());
    for (idx, (y, t)) in probes.iter().enumerate() {
        let moments = match kernel.support(model, y, *t)? {
            Some(support) => Moments::exact(&support),
            None => {
                let mut noise = RngStream::new(seed, idx as u64).noise(model.dim_noise());
                let draws = (0..n_draws.max(2))
                    .map(|_| kernel.transition(model, y, *t, &mut noise))
                    .collect::<Result<Vec<_>>>()?;
                Moments::sampled(&draws)
            }
        };
        results.push(judge(model, kernel, y, *t, &moments, c, h));
    }
    let pass = results.iter().all(ProbeResult::pass);
    Ok(ConsistencyReport { h, c, n_draws, probes: results, pass })
}

struct Moments {
    exact: bool,
    mean_dt: f64,
    dt_min: f64,
    dt_max: f64,
    /// Whether the smallest step reached the horizon (truncated step).
    truncated: bool,
    mean_dy: Vec<f64>,
    cov: Vec<f64>,
    mean_se: Vec<f64>,
    cov_se: Vec<f64>,
}

impl Moments {
    fn exact(support: &[(f64, ChainStep)]) -> Self {
        let d = support[0].1.dy.len();
        let mean_dt: f64 = support.iter().map(|(p, s)| p * s.dt).sum();
        let mut mean_dy = vec![0.0; d];
        for (p, s) in support {
            for (m, dy) in mean_dy.iter_mut().zip(&s.dy) {
                *m += p * dy;
            }
        }
        let mut cov = vec![0.0; d * d];
        for (p, s) in support {
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += p * (s.dy[i] - mean_dy[i]) * (s.dy[j] - mean_dy[j]);
                }
            }
        }
        let dts = support.iter().map(|(_, s)| s.dt);
        Self {
            exact: true,
            mean_dt,
            dt_min: dts.clone().fold(f64::INFINITY, f64::min),
            dt_max: dts.fold(0.0, f64::max),
            truncated: support.iter().any(|(_, s)| s.t_next == 1.0),
            mean_dy,
            cov,
            mean_se: vec![0.0; d],
            cov_se: vec![0.0; d * d],
        }
    }

    fn sampled(draws: &[ChainStep]) -> Self {
        let n = draws.len() as f64;
        let d = draws[0].dy.len();
        let mean_dt = draws.iter().map(|s| s.dt).sum::<f64>() / n;
        let mut mean_dy = vec![0.0; d];
        for s in draws {
            for (m, dy) in mean_dy.iter_mut().zip(&s.dy) {
                *m += dy;
            }
        }
        mean_dy.iter_mut().for_each(|m| *m /= n);

        // cov entries and the spread of the centred products behind them
        let mut cov = vec![0.0; d * d];
        let mut prod_sq = vec![0.0; d * d];
        for s in draws {
            for i in 0..d {
                for j in 0..d {
                    let p = (s.dy[i] - mean_dy[i]) * (s.dy[j] - mean_dy[j]);
                    cov[i * d + j] += p;
                    prod_sq[i * d + j] += p * p;
                }
            }
        }
        let mut cov_se = vec![0.0; d * d];
        for k in 0..d * d {
            let m = cov[k] / n;
            let var = (prod_sq[k] / n - m * m).max(0.0);
            cov[k] /= n - 1.0;
            cov_se[k] = (var / n).sqrt();
        }
        let mean_se = (0..d).map(|i| (cov[i * d + i] / n).sqrt()).collect();
        let dts = draws.iter().map(|s| s.dt);
        Self {
            exact: false,
            mean_dt,
            dt_min: dts.clone().fold(f64::INFINITY, f64::min),
            dt_max: dts.fold(0.0, f64::max),
            truncated: draws.iter().any(|s| s.t_next == 1.0),
            mean_dy,
            cov,
            mean_se,
            cov_se,
        }
    }
}

fn judge(
    model: &SdeModel,
    kernel: &dyn TransitionKernel,
    y: &[f64],
    t: f64,
    m: &Moments,
    c: f64,
    h: f64,
) -> ProbeResult {
    let d = y.len();
    let d1 = model.dim_noise();
    let b = model.drift(y, t);
    let s = model.diffusion(y, t);
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (0..d1).map(|k| s[i * d1 + k] * s[j * d1 + k]).sum();
        }
    }
    let r1: Vec<f64> = (0..d).map(|i| (m.mean_dy[i] - m.mean_dt * b[i]) / m.mean_dt).collect();
    let r1_se: Vec<f64> = m.mean_se.iter().map(|se| se / m.mean_dt).collect();
    let r2: Vec<f64> = (0..d * d).map(|k| (m.cov[k] - m.mean_dt * a[k]) / m.mean_dt).collect();
    let r2_se: Vec<f64> = m.cov_se.iter().map(|se| se / m.mean_dt).collect();

    let ok = |r: &[f64], se: &[f64]| {
        r.iter().zip(se).all(|(r, se)| {
            // exact moments carry floating-point rounding only
            let rounding = if m.exact { 1e-12 } else { 0.0 };
            r.abs() <= c * h + CONSISTENCY_SE_MULTIPLIER * se + rounding
        })
    };
    let (k_lo, k_hi) = kernel.qu_bounds();
    let qu_pass = m.truncated
        || (m.dt_min >= h / k_lo * (1.0 - 1e-9) && m.dt_max <= k_hi * h * (1.0 + 1e-9));
    ProbeResult {
        y: y.to_vec(),
        t,
        exact: m.exact,
        mean_dt: m.mean_dt,
        dt_min: m.dt_min,
        dt_max: m.dt_max,
        lc1_pass: ok(&r1, &r1_se),
        lc2_pass: ok(&r2, &r2_se),
        qu_pass,
        r1,
        r1_se,
        r2,
        r2_se,
    }
}
