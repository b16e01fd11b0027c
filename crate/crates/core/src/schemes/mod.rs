//! Markov chain approximations of a diffusion and their piecewise-constant
//! interpolation on `[0, 1]`.
//!
//! Three kernels are provided:
//!
//! * `Euler`: `y' = y + b h + sigma sqrt(h) N`, `dt = h`.
//! * `BinomialFixed`: `y' = y + b h +/- sigma sqrt(h)` with probability 1/2, `dt = h`.
//! * `BinomialVariable`: `dt = h / sigma^2`, `y' = y + b dt +/- sqrt(h)`.
//!
//! plus `LogExact`, the exact lognormal transition of geometric Brownian
//! motion, used for oracle comparisons.
//!
//! The last step of a chain is shortened so the grid ends exactly at 1. A
//! truncated binomial-variable step keeps its conditional variance equal to
//! `sigma^2 dt` by jumping `+/- sigma sqrt(dt)` instead of `+/- sqrt(h)`.

mod consistency;

pub use consistency::{
    check_kernel_consistency, check_local_consistency, ConsistencyReport, ProbeResult,
};

use crate::error::{Error, Result};
use crate::models::SdeModel;
use crate::path::StepPath;
use crate::rng::{Noise, RngStream};

/// Which transition kernel drives the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Euler,
    BinomialFixed,
    BinomialVariable,
    /// Exact lognormal stepping; geometric Brownian motion only.
    LogExact,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Euler => "euler",
            SchemeKind::BinomialFixed => "binomial_fixed",
            SchemeKind::BinomialVariable => "binomial_variable",
            SchemeKind::LogExact => "log_exact",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "euler" => SchemeKind::Euler,
            "binomial_fixed" => SchemeKind::BinomialFixed,
            "binomial_variable" => SchemeKind::BinomialVariable,
            "log_exact" => SchemeKind::LogExact,
            _ => return None,
        })
    }
}

/// Scheme parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub h: f64,
    /// `(K_lower, K_upper)`: every non-final step satisfies
    /// `h / K_lower <= dt <= K_upper h`.
    pub qu_bounds: (f64, f64),
    /// Optional state cap `y -> min(y, cap)` applied after every step.
    pub cap: Option<f64>,
    /// Bound `|sigma| ^ |1/sigma| > epsilon` required by `BinomialVariable`.
    pub epsilon: Option<f64>,
}

impl SchemeConfig {
    /// Configuration with the kind's natural quasi-uniformity bounds.
    pub fn new(kind: SchemeKind, h: f64) -> Self {
        Self { kind, h, qu_bounds: (1.0, 1.0), cap: None, epsilon: None }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    /// Sets epsilon and the matching bounds `(1/eps^2, 1/eps^2)`.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        let k = 1.0 / (epsilon * epsilon);
        self.qu_bounds = (k, k);
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn validate(&self, model: &SdeModel) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidScheme(format!("step parameter h must be > 0, got {}", self.h)));
        }
        let (lo, hi) = self.qu_bounds;
        if !(lo >= 1.0 && hi >= 1.0) {
            return Err(Error::InvalidScheme(format!(
                "quasi-uniform constants must be >= 1, got ({lo}, {hi})"
            )));
        }
        if let Some(cap) = self.cap {
            if cap.is_nan() {
                return Err(Error::InvalidScheme("cap is NaN".into()));
            }
        }
        match self.kind {
            SchemeKind::BinomialFixed | SchemeKind::BinomialVariable => {
                if model.dim_state() != 1 || model.dim_noise() != 1 {
                    return Err(Error::Dimension(format!(
                        "{} needs a scalar model, got d={}, d1={}",
                        self.kind.name(),
                        model.dim_state(),
                        model.dim_noise()
                    )));
                }
            }
            SchemeKind::LogExact => {
                if model.gbm_params().is_none() {
                    return Err(Error::InvalidScheme(format!(
                        "log_exact stepping needs a gbm model, got {}",
                        model.label()
                    )));
                }
            }
            SchemeKind::Euler => {}
        }
        if self.kind == SchemeKind::BinomialVariable {
            match self.epsilon {
                Some(e) if e > 0.0 && e < 1.0 => {}
                Some(e) => {
                    return Err(Error::InvalidScheme(format!("epsilon must lie in (0, 1), got {e}")))
                }
                None => {
                    return Err(Error::InvalidScheme(
                        "binomial_variable needs a declared epsilon".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Uniform step count `N` when `1/h` is an integer, so that grid times
    /// can be computed as `n / N`.
    fn uniform_steps(&self) -> Option<usize> {
        let inv = 1.0 / self.h;
        let n = inv.round();
        ((inv - n).abs() <= 1e-9 * inv && n >= 1.0).then_some(n as usize)
    }
}

/// One transition of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub t_next: f64,
    pub y_next: Vec<f64>,
    pub dt: f64,
    pub dy: Vec<f64>,
}

/// Reusable buffers for coefficient evaluation.
#[derive(Debug, Clone)]
struct Scratch {
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    normals: Vec<f64>,
}

impl Scratch {
    fn for_model(model: &SdeModel) -> Self {
        let (d, d1) = (model.dim_state(), model.dim_noise());
        Self { drift: vec![0.0; d], diffusion: vec![0.0; d * d1], normals: vec![0.0; d1] }
    }

    fn load(&mut self, model: &SdeModel, y: &[f64], t: f64) -> Result<()> {
        model.drift_into(y, t, &mut self.drift);
        model.diffusion_into(y, t, &mut self.diffusion);
        if self.drift.iter().chain(&self.diffusion).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteCoefficient { y: y.to_vec(), t })
        }
    }
}

/// Writes `y + b dt + sigma sqrt(dt) N` into `out`.
fn euler_into(model: &SdeModel, y: &[f64], t: f64, dt: f64, s: &mut Scratch, noise: &mut Noise, out: &mut [f64]) -> Result<()> {
    s.load(model, y, t)?;
    noise.fill_normals(&mut s.normals);
    let d1 = s.normals.len();
    let sq = dt.sqrt();
    for i in 0..y.len() {
        let mut acc = 0.0;
        for j in 0..d1 {
            acc += s.diffusion[i * d1 + j] * s.normals[j];
        }
        out[i] = y[i] + s.drift[i] * dt + acc * sq;
    }
    Ok(())
}

fn binomial_fixed_into(model: &SdeModel, y: &[f64], t: f64, dt: f64, s: &mut Scratch, noise: &mut Noise, out: &mut [f64]) -> Result<()> {
    s.load(model, y, t)?;
    out[0] = y[0] + s.drift[0] * dt + noise.sign(0) * s.diffusion[0] * dt.sqrt();
    Ok(())
}

fn log_exact_into(model: &SdeModel, y: &[f64], dt: f64, noise: &mut Noise, out: &mut [f64]) -> Result<()> {
    let (r, sigma) = model
        .gbm_params()
        .ok_or_else(|| Error::InvalidScheme("log_exact stepping needs a gbm model".into()))?;
    out[0] = y[0] * ((r - 0.5 * sigma * sigma) * dt + sigma * dt.sqrt() * noise.normal(0)).exp();
    Ok(())
}

/// Duration of a binomial-variable step before horizon truncation.
fn variable_dt(sigma: f64, y: f64, t: f64, h: f64, epsilon: f64) -> Result<f64> {
    let a = sigma.abs();
    if !(a > epsilon && 1.0 / a > epsilon) {
        return Err(Error::VolatilityBound { sigma, y, t, epsilon });
    }
    Ok(h / (sigma * sigma))
}

/// `(dt, jump)` of a binomial-variable step from `t`, truncated at the
/// horizon.
fn variable_step_size(sigma: f64, y: f64, t: f64, h: f64, epsilon: f64) -> Result<(f64, f64, bool)> {
    let dt = variable_dt(sigma, y, t, h, epsilon)?;
    let remaining = 1.0 - t;
    if t + dt >= 1.0 - 1e-12 * h {
        Ok((remaining, sigma.abs() * remaining.sqrt(), true))
    } else {
        Ok((dt, h.sqrt(), false))
    }
}

fn check_time(t: f64) -> Result<f64> {
    let remaining = 1.0 - t;
    if !(t >= 0.0 && remaining > 0.0) {
        return Err(Error::Domain(format!("cannot step from t={t}: horizon is 1")));
    }
    Ok(remaining)
}

fn finish(y: &[f64], t: f64, dt: f64, y_next: Vec<f64>) -> ChainStep {
    let dy = y_next.iter().zip(y).map(|(a, b)| a - b).collect();
    let t_next = if dt >= 1.0 - t { 1.0 } else { t + dt };
    ChainStep { t_next, y_next, dt, dy }
}

/// One Euler transition with `dt = min(h, 1 - t)`.
pub fn euler_step(model: &SdeModel, y: &[f64], t: f64, h: f64, noise: &mut Noise) -> Result<ChainStep> {
    let dt = h.min(check_time(t)?);
    let mut s = Scratch::for_model(model);
    let mut out = vec![0.0; y.len()];
    euler_into(model, y, t, dt, &mut s, noise, &mut out)?;
    Ok(finish(y, t, dt, out))
}

/// One fixed-step binomial transition with `dt = min(h, 1 - t)`.
pub fn binomial_fixed_step(model: &SdeModel, y: &[f64], t: f64, h: f64, noise: &mut Noise) -> Result<ChainStep> {
    if model.dim_state() != 1 || model.dim_noise() != 1 || y.len() != 1 {
        return Err(Error::Dimension("binomial_fixed needs d = d1 = 1".into()));
    }
    let dt = h.min(check_time(t)?);
    let mut s = Scratch::for_model(model);
    let mut out = vec![0.0];
    binomial_fixed_into(model, y, t, dt, &mut s, noise, &mut out)?;
    Ok(finish(y, t, dt, out))
}

/// One variable-step binomial transition with `dt = h / sigma^2`.
pub fn binomial_variable_step(model: &SdeModel, y: &[f64], t: f64, h: f64, epsilon: f64, noise: &mut Noise) -> Result<ChainStep> {
    if model.dim_state() != 1 || model.dim_noise() != 1 || y.len() != 1 {
        return Err(Error::Dimension("binomial_variable needs d = d1 = 1".into()));
    }
    check_time(t)?;
    let mut s = Scratch::for_model(model);
    s.load(model, y, t)?;
    let (dt, jump, _) = variable_step_size(s.diffusion[0], y[0], t, h, epsilon)?;
    let out = vec![y[0] + s.drift[0] * dt + noise.sign(0) * jump];
    Ok(finish(y, t, dt, out))
}

/// A transition kernel that can be sampled and, when it has finite support,
/// enumerated exactly.
pub trait TransitionKernel: Sync {
    fn h(&self) -> f64;
    fn qu_bounds(&self) -> (f64, f64);
    fn transition(&self, model: &SdeModel, y: &[f64], t: f64, noise: &mut Noise) -> Result<ChainStep>;
    /// `(probability, step)` pairs when the transition law has finite support.
    fn support(&self, _model: &SdeModel, _y: &[f64], _t: f64) -> Result<Option<Vec<(f64, ChainStep)>>> {
        Ok(None)
    }
}

impl TransitionKernel for SchemeConfig {
    fn h(&self) -> f64 {
        self.h
    }

    fn qu_bounds(&self) -> (f64, f64) {
        self.qu_bounds
    }

    fn transition(&self, model: &SdeModel, y: &[f64], t: f64, noise: &mut Noise) -> Result<ChainStep> {
        match self.kind {
            SchemeKind::Euler => euler_step(model, y, t, self.h, noise),
            SchemeKind::BinomialFixed => binomial_fixed_step(model, y, t, self.h, noise),
            SchemeKind::BinomialVariable => {
                let eps = self.epsilon.ok_or_else(|| {
                    Error::InvalidScheme("binomial_variable needs a declared epsilon".into())
                })?;
                binomial_variable_step(model, y, t, self.h, eps, noise)
            }
            SchemeKind::LogExact => {
                let dt = self.h.min(check_time(t)?);
                let mut out = vec![0.0];
                log_exact_into(model, y, dt, noise, &mut out)?;
                Ok(finish(y, t, dt, out))
            }
        }
    }

    fn support(&self, model: &SdeModel, y: &[f64], t: f64) -> Result<Option<Vec<(f64, ChainStep)>>> {
        let (dt, drift, jump) = match self.kind {
            SchemeKind::Euler | SchemeKind::LogExact => return Ok(None),
            SchemeKind::BinomialFixed => {
                let dt = self.h.min(check_time(t)?);
                let mut s = Scratch::for_model(model);
                s.load(model, y, t)?;
                (dt, s.drift[0], s.diffusion[0] * dt.sqrt())
            }
            SchemeKind::BinomialVariable => {
                check_time(t)?;
                let eps = self.epsilon.ok_or_else(|| {
                    Error::InvalidScheme("binomial_variable needs a declared epsilon".into())
                })?;
                let mut s = Scratch::for_model(model);
                s.load(model, y, t)?;
                let (dt, jump, _) = variable_step_size(s.diffusion[0], y[0], t, self.h, eps)?;
                (dt, s.drift[0], jump)
            }
        };
        let t_next = if dt >= 1.0 - t { 1.0 } else { t + dt };
        let branch = |sign: f64| {
            let dy = drift * dt + sign * jump;
            (0.5, ChainStep { t_next, y_next: vec![y[0] + dy], dt, dy: vec![dy] })
        };
        Ok(Some(vec![branch(1.0), branch(-1.0)]))
    }
}

/// Simulates one chain from the model's initial state up to `t = 1` and
/// returns its piecewise-constant interpolation.
pub fn simulate_path(model: &SdeModel, config: &SchemeConfig, stream: RngStream) -> Result<StepPath> {
    config.validate(model)?;
    let d = model.dim_state();
    let mut noise = stream.noise(model.dim_noise());
    let mut scratch = Scratch::for_model(model);
    let h = config.h;
    let (k_lo, k_hi) = config.qu_bounds;
    let (dt_lo, dt_hi) = (h / k_lo * (1.0 - 1e-9), k_hi * h * (1.0 + 1e-9));

    let uniform = match config.kind {
        SchemeKind::BinomialVariable => None,
        _ => Some(config.uniform_steps().unwrap_or_else(|| (1.0 / h).ceil() as usize)),
    };
    let exact_grid = config.kind != SchemeKind::BinomialVariable && config.uniform_steps().is_some();
    let capacity = uniform.unwrap_or(((1.0 / h).ceil() as usize).saturating_mul(2)) + 1;

    let mut times = Vec::with_capacity(capacity);
    let mut values = Vec::with_capacity(capacity * d);
    let mut y = model.x0().to_vec();
    apply_cap(&mut y, config.cap);
    let mut y_next = vec![0.0; d];
    times.push(0.0);
    values.extend_from_slice(&y);

    let mut t = 0.0_f64;
    let mut n = 0usize;
    while t < 1.0 {
        let (dt, t_next, final_step) = match config.kind {
            SchemeKind::BinomialVariable => {
                scratch.load(model, &y, t)?;
                let eps = config.epsilon.unwrap_or(0.0);
                let (dt, jump, truncated) = variable_step_size(scratch.diffusion[0], y[0], t, h, eps)?;
                y_next[0] = y[0] + scratch.drift[0] * dt + noise.sign(0) * jump;
                (dt, if truncated { 1.0 } else { t + dt }, truncated)
            }
            kind => {
                let steps = uniform.unwrap_or(1);
                let (dt, t_next, last) = if exact_grid {
                    let t_next = (n + 1) as f64 / steps as f64;
                    (h, t_next, n + 1 == steps)
                } else if t + h >= 1.0 - 1e-12 * h {
                    (1.0 - t, 1.0, true)
                } else {
                    (h, t + h, false)
                };
                match kind {
                    SchemeKind::Euler => euler_into(model, &y, t, dt, &mut scratch, &mut noise, &mut y_next)?,
                    SchemeKind::BinomialFixed => binomial_fixed_into(model, &y, t, dt, &mut scratch, &mut noise, &mut y_next)?,
                    SchemeKind::LogExact => log_exact_into(model, &y, dt, &mut noise, &mut y_next)?,
                    SchemeKind::BinomialVariable => unreachable!(),
                }
                (dt, if last { 1.0 } else { t_next }, last)
            }
        };
        if !final_step && !(dt_lo..=dt_hi).contains(&dt) {
            return Err(Error::QuasiUniform { dt, lo: h / k_lo, hi: k_hi * h, t });
        }
        apply_cap(&mut y_next, config.cap);
        if let Some(v) = y_next.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient { y: vec![*v], t: t_next });
        }
        std::mem::swap(&mut y, &mut y_next);
        t = t_next;
        n += 1;
        times.push(t);
        values.extend_from_slice(&y);
    }
    StepPath::new(times, values, d)
}

#[inline]
fn apply_cap(y: &mut [f64], cap: Option<f64>) {
    if let Some(c) = cap {
        for v in y.iter_mut() {
            *v = v.min(c);
        }
    }
}

/// Anything that produces sample paths for a given step parameter.
pub trait PathSource: Sync {
    fn h(&self) -> f64;
    fn simulate(&self, stream: RngStream) -> Result<StepPath>;
    /// Whether the underlying model satisfies the Lipschitz/Hoelder
    /// condition, so second moments of the chain stay bounded.
    fn bounded_moments(&self) -> bool {
        false
    }
}

/// A model together with a scheme configuration.
#[derive(Debug, Clone)]
pub struct SchemeSimulator {
    pub model: SdeModel,
    pub config: SchemeConfig,
}

impl SchemeSimulator {
    pub fn new(model: SdeModel, config: SchemeConfig) -> Result<Self> {
        config.validate(&model)?;
        Ok(Self { model, config })
    }
}

impl PathSource for SchemeSimulator {
    fn h(&self) -> f64 {
        self.config.h
    }

    fn simulate(&self, stream: RngStream) -> Result<StepPath> {
        simulate_path(&self.model, &self.config, stream)
    }

    fn bounded_moments(&self) -> bool {
        self.model.is_a5_compliant()
    }
}
