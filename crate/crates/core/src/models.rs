//! Diffusion models `dY = b(Y, t) dt + sigma(Y, t) dW`.
//!
//! Each model carries an optional declaration of the Lipschitz-in-state,
//! Hoelder-1/2-in-time condition with an explicit constant `K`. Models
//! without it (the Bessel process, whose drift `1/y` blows up at the origin)
//! are only used by the counter-example harnesses.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// User-supplied coefficients for models outside the built-in family.
pub trait Coefficients: Send + Sync {
    fn dim_state(&self) -> usize;
    fn dim_noise(&self) -> usize;
    /// Writes `b(y, t)` into `out` (length `d`).
    fn drift(&self, y: &[f64], t: f64, out: &mut [f64]);
    /// Writes `sigma(y, t)` row-major into `out` (length `d * d1`).
    fn diffusion(&self, y: &[f64], t: f64, out: &mut [f64]);
}

/// Volatility map `sigma(y)` of the stochastic-volatility model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolFn {
    Constant(f64),
    /// `c * y`
    Linear(f64),
    /// `c * y^p` for `y >= 0`, zero below.
    Power { c: f64, p: f64 },
}

impl VolFn {
    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            VolFn::Constant(c) => c,
            VolFn::Linear(c) => c * y,
            VolFn::Power { c, p } => c * y.max(0.0).powf(p),
        }
    }

    fn positive_on_positive_axis(&self) -> bool {
        match *self {
            VolFn::Constant(c) | VolFn::Linear(c) => c > 0.0,
            VolFn::Power { c, p } => c > 0.0 && p.is_finite(),
        }
    }
}

/// Deterministic function of time: `a + b t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFn {
    Constant(f64),
    Affine { a: f64, b: f64 },
}

impl TimeFn {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Constant(c) => c,
            TimeFn::Affine { a, b } => a + b * t,
        }
    }

    fn constant_value(&self) -> Option<f64> {
        match *self {
            TimeFn::Constant(c) => Some(c),
            TimeFn::Affine { a, b } => (b == 0.0).then_some(a),
        }
    }
}

/// Parameters of the price / volatility system
/// `dX = X (r dt + sigma(Y) dW)`, `dY = Y (mu(t) dt + b(t) dB)`,
/// `corr(W, B) = rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochVolModel {
    pub r: f64,
    pub sigma_of_y: VolFn,
    pub mu: TimeFn,
    pub b_vol: TimeFn,
    pub rho: f64,
    pub x0: f64,
    pub y0: f64,
}

impl StochVolModel {
    /// The degenerate case `sigma(Y) = sigma`, `mu = b = 0`.
    pub fn constant_vol(r: f64, sigma: f64, x0: f64) -> Self {
        Self {
            r,
            sigma_of_y: VolFn::Constant(sigma),
            mu: TimeFn::Constant(0.0),
            b_vol: TimeFn::Constant(0.0),
            rho: 0.0,
            x0,
            y0: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0 && self.y0 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "initial values must be positive, got x0={}, y0={}",
                self.x0, self.y0
            )));
        }
        if !(self.rho.abs() <= 1.0) {
            return Err(Error::InvalidModel(format!("correlation {} outside [-1, 1]", self.rho)));
        }
        if !self.sigma_of_y.positive_on_positive_axis() {
            return Err(Error::InvalidModel(format!(
                "volatility map {:?} is not positive on y > 0",
                self.sigma_of_y
            )));
        }
        for y in [1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3] {
            let s = self.sigma_of_y.eval(y);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidModel(format!("sigma({y}) = {s} is not positive")));
            }
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidModel("rate must be finite".into()));
        }
        Ok(())
    }
}

/// Lower-triangular factor `[[1, 0], [rho, sqrt(1 - rho^2)]]` mapping two
/// independent normals to `(dW, dB)` with correlation `rho`.
pub fn correlation_factor(rho: f64) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [rho, (1.0 - rho * rho).max(0.0).sqrt()]]
}

#[derive(Clone)]
enum Kind {
    Gbm { r: f64, sigma: f64 },
    Bessel3,
    Constant { drift: f64, diffusion: f64 },
    StochVol(StochVolModel),
    Custom(Arc<dyn Coefficients>),
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Gbm { r, sigma } => write!(f, "Gbm {{ r: {r}, sigma: {sigma} }}"),
            Kind::Bessel3 => write!(f, "Bessel3"),
            Kind::Constant { drift, diffusion } => {
                write!(f, "Constant {{ drift: {drift}, diffusion: {diffusion} }}")
            }
            Kind::StochVol(p) => write!(f, "StochVol({p:?})"),
            Kind::Custom(c) => write!(f, "Custom(d={}, d1={})", c.dim_state(), c.dim_noise()),
        }
    }
}

/// Declared constant and probe box for the Lipschitz/Hoelder condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A5Declaration {
    pub k: f64,
    /// Every state coordinate is probed in `[lo, hi]`.
    pub state_box: (f64, f64),
}

/// An SDE model with its initial state.
#[derive(Debug, Clone)]
pub struct SdeModel {
    label: String,
    kind: Kind,
    x0: Vec<f64>,
    a5: Option<A5Declaration>,
}

impl SdeModel {
    /// Geometric Brownian motion `dX = r X dt + sigma X dW`.
    pub fn gbm(r: f64, sigma: f64, x0: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidModel(format!("gbm volatility must be >= 0, got {sigma}")));
        }
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidModel(format!("gbm initial value must be > 0, got {x0}")));
        }
        if !r.is_finite() {
            return Err(Error::InvalidModel("gbm rate must be finite".into()));
        }
        Ok(Self {
            label: "gbm".into(),
            kind: Kind::Gbm { r, sigma },
            x0: vec![x0],
            a5: Some(A5Declaration { k: r.abs().max(sigma), state_box: (0.0, 10.0) }),
        })
    }

    /// Bessel process of order 3: `dX = dt / X + dW`.
    pub fn bessel3(x0: f64) -> Result<Self> {
        if !(x0 > 0.0) || !x0.is_finite() {
            return Err(Error::InvalidModel(format!("bessel3 initial value must be > 0, got {x0}")));
        }
        Ok(Self { label: "bessel3".into(), kind: Kind::Bessel3, x0: vec![x0], a5: None })
    }

    /// Scalar model with constant drift and diffusion (Brownian motion with
    /// drift).
    pub fn constant_coefficients(drift: f64, diffusion: f64, x0: f64) -> Result<Self> {
        if !(drift.is_finite() && diffusion.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidModel("coefficients must be finite".into()));
        }
        Ok(Self {
            label: "constant".into(),
            kind: Kind::Constant { drift, diffusion },
            x0: vec![x0],
            a5: Some(A5Declaration { k: 0.0, state_box: (-10.0, 10.0) }),
        })
    }

    /// Price/volatility system with correlated drivers.
    pub fn stoch_vol(params: StochVolModel) -> Result<Self> {
        params.validate()?;
        let a5 = match (
            params.sigma_of_y,
            params.mu.constant_value(),
            params.b_vol.constant_value(),
        ) {
            (VolFn::Constant(c), Some(mu), Some(b)) => Some(A5Declaration {
                k: params.r.abs().max(c).max(mu.abs()).max(b.abs()),
                state_box: (0.0, 10.0),
            }),
            _ => None,
        };
        Ok(Self {
            label: "stoch_vol".into(),
            kind: Kind::StochVol(params),
            x0: vec![params.x0, params.y0],
            a5,
        })
    }

    /// Wraps user coefficients. `a5` declares the Lipschitz constant when
    /// known.
    pub fn custom(
        label: impl Into<String>,
        coefficients: Arc<dyn Coefficients>,
        x0: Vec<f64>,
        a5: Option<A5Declaration>,
    ) -> Result<Self> {
        if x0.len() != coefficients.dim_state() {
            return Err(Error::Dimension(format!(
                "initial state has {} entries, model dimension is {}",
                x0.len(),
                coefficients.dim_state()
            )));
        }
        Ok(Self { label: label.into(), kind: Kind::Custom(coefficients), x0, a5 })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.dim_state() {
            return Err(Error::Dimension("initial state dimension mismatch".into()));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn a5(&self) -> Option<&A5Declaration> {
        self.a5.as_ref()
    }

    /// `(r, sigma)` when this is a geometric Brownian motion.
    pub fn gbm_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Gbm { r, sigma } => Some((r, sigma)),
            _ => None,
        }
    }

    pub fn is_a5_compliant(&self) -> bool {
        self.a5.is_some()
    }

    pub fn dim_state(&self) -> usize {
        match &self.kind {
            Kind::StochVol(_) => 2,
            Kind::Custom(c) => c.dim_state(),
            _ => 1,
        }
    }

    pub fn dim_noise(&self) -> usize {
        match &self.kind {
            Kind::StochVol(_) => 2,
            Kind::Custom(c) => c.dim_noise(),
            _ => 1,
        }
    }

    #[inline]
    pub fn drift_into(&self, y: &[f64], t: f64, out: &mut [f64]) {
        match &self.kind {
            Kind::Gbm { r, .. } => out[0] = r * y[0],
            Kind::Bessel3 => out[0] = 1.0 / y[0],
            Kind::Constant { drift, .. } => out[0] = *drift,
            Kind::StochVol(p) => {
                out[0] = p.r * y[0];
                out[1] = p.mu.eval(t) * y[1];
            }
            Kind::Custom(c) => c.drift(y, t, out),
        }
    }

    #[inline]
    pub fn diffusion_into(&self, y: &[f64], t: f64, out: &mut [f64]) {
        match &self.kind {
            Kind::Gbm { sigma, .. } => out[0] = sigma * y[0],
            Kind::Bessel3 => out[0] = 1.0,
            Kind::Constant { diffusion, .. } => out[0] = *diffusion,
            Kind::StochVol(p) => {
                let l = correlation_factor(p.rho);
                let b = p.b_vol.eval(t) * y[1];
                out[0] = p.sigma_of_y.eval(y[1]) * y[0];
                out[1] = 0.0;
                out[2] = l[1][0] * b;
                out[3] = l[1][1] * b;
            }
            Kind::Custom(c) => c.diffusion(y, t, out),
        }
    }

    /// `b(y, t)` as a fresh vector.
    pub fn drift(&self, y: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_state()];
        self.drift_into(y, t, &mut out);
        out
    }

    /// `sigma(y, t)` row-major as a fresh vector.
    pub fn diffusion(&self, y: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim_state() * self.dim_noise()];
        self.diffusion_into(y, t, &mut out);
        out
    }
}

/// Result of randomized probing of the Lipschitz/Hoelder bound.
#[derive(Debug, Clone, PartialEq)]
pub struct A5Report {
    pub declared_k: f64,
    pub max_ratio_drift: f64,
    pub max_ratio_diffusion: f64,
    pub max_ratio: f64,
    pub n_probes: usize,
    pub pass: bool,
}

/// Samples pairs `(y1, t1), (y2, t2)` in the declared box and reports the
/// largest observed `|phi(y1,t1) - phi(y2,t2)| / (|y1-y2| + |t1-t2|^(1/2))`
/// for `phi` in `{b, sigma}`.
pub fn probe_a5(model: &SdeModel, n_probes: usize, seed: u64) -> Result<A5Report> {
    let decl = *model
        .a5()
        .ok_or_else(|| Error::NotCompliant(model.label().to_string()))?;
    let d = model.dim_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = decl.state_box;
    let mut y1 = vec![0.0; d];
    let mut y2 = vec![0.0; d];
    let (mut b1, mut b2) = (vec![0.0; d], vec![0.0; d]);
    let nd = d * model.dim_noise();
    let (mut s1, mut s2) = (vec![0.0; nd], vec![0.0; nd]);
    let mut max_drift: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for _ in 0..n_probes {
        for k in 0..d {
            y1[k] = rng.random_range(lo..=hi);
            y2[k] = rng.random_range(lo..=hi);
        }
        let t1: f64 = rng.random();
        let t2: f64 = rng.random();
        let denom = euclid(&y1, &y2) + (t1 - t2).abs().sqrt();
        if denom == 0.0 {
            continue;
        }
        model.drift_into(&y1, t1, &mut b1);
        model.drift_into(&y2, t2, &mut b2);
        model.diffusion_into(&y1, t1, &mut s1);
        model.diffusion_into(&y2, t2, &mut s2);
        max_drift = max_drift.max(euclid(&b1, &b2) / denom);
        max_diff = max_diff.max(euclid(&s1, &s2) / denom);
    }
    let max_ratio = max_drift.max(max_diff);
    Ok(A5Report {
        declared_k: decl.k,
        max_ratio_drift: max_drift,
        max_ratio_diffusion: max_diff,
        max_ratio,
        n_probes,
        // rounding slack: the bound is attained for linear coefficients
        pass: max_ratio <= decl.k * (1.0 + 1e-12) + 1e-15,
    })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gbm_coefficients() {
        let m = SdeModel::gbm(0.1, 0.3, 0.8).unwrap();
        assert_eq!(m.drift(&[2.0], 0.0), vec![0.2]);
        assert!((m.diffusion(&[2.0], 0.0)[0] - 0.6).abs() < 1e-15);
        assert!(m.is_a5_compliant());
        assert!(SdeModel::gbm(0.1, -0.3, 0.8).is_err());
        assert!(SdeModel::gbm(0.1, 0.3, 0.0).is_err());
        assert!(SdeModel::gbm(0.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn bessel_coefficients() {
        let m = SdeModel::bessel3(1.0).unwrap();
        assert_eq!(m.drift(&[2.0], 0.3), vec![0.5]);
        assert_eq!(m.diffusion(&[7.0], 0.9), vec![1.0]);
        assert!(!m.is_a5_compliant());
        assert!(SdeModel::bessel3(0.0).is_err());
        assert!(matches!(probe_a5(&m, 10, 1), Err(Error::NotCompliant(_))));
    }

    #[test]
    fn probe_gbm_passes() {
        let m = SdeModel::gbm(0.1, 0.3, 0.8).unwrap();
        let rep = probe_a5(&m, 10_000, 42).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_ratio <= 0.3 + 1e-12);
        assert_eq!(rep.declared_k, 0.3);
    }

    #[test]
    fn probe_constant_model_has_zero_drift_ratio() {
        let m = SdeModel::constant_coefficients(0.5, 1.0, 0.0).unwrap();
        let rep = probe_a5(&m, 1000, 3).unwrap();
        assert_eq!(rep.max_ratio_drift, 0.0);
        assert_eq!(rep.max_ratio_diffusion, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn stoch_vol_validation() {
        let mut p = StochVolModel::constant_vol(0.1, 0.3, 0.8);
        assert!(SdeModel::stoch_vol(p).is_ok());
        p.rho = 1.5;
        assert!(SdeModel::stoch_vol(p).is_err());
        p.rho = 0.0;
        p.x0 = -1.0;
        assert!(SdeModel::stoch_vol(p).is_err());
        let mut q = StochVolModel::constant_vol(0.1, 0.3, 0.8);
        q.sigma_of_y = VolFn::Constant(0.0);
        assert!(SdeModel::stoch_vol(q).is_err());
    }

    #[test]
    fn stoch_vol_probe_with_constant_vol() {
        let mut p = StochVolModel::constant_vol(0.1, 0.3, 0.8);
        p.mu = TimeFn::Constant(0.05);
        p.b_vol = TimeFn::Constant(0.4);
        p.rho = -0.5;
        let m = SdeModel::stoch_vol(p).unwrap();
        let rep = probe_a5(&m, 5000, 9).unwrap();
        assert!(rep.pass, "{rep:?}");

        p.sigma_of_y = VolFn::Linear(0.3);
        assert!(!SdeModel::stoch_vol(p).unwrap().is_a5_compliant());
    }

    #[test]
    fn correlation_factor_rows() {
        let l = correlation_factor(1.0);
        assert_eq!(l, [[1.0, 0.0], [1.0, 0.0]]);
        let l = correlation_factor(0.0);
        assert_eq!(l, [[1.0, 0.0], [0.0, 1.0]]);
    }
}
