//! Path functionals
//! `G(x) = g(Pi(x, tau nu1), Pi(x, nu2), Pi(x*, tau nu3), Pi(x*, nu4), tau)`
//! and the built-in payoffs `g`.
//!
//! The payoff receives `4m + 1` arguments laid out as
//! `[z1_1..z1_m, z2_1..z2_m, z3_1..z3_m, z4_1..z4_m, tau]`. With
//! `nu2 = nu4 = (1/m, ..., 1)`, argument `x_{2m}` (1-based) is the terminal
//! value and `x_{4m}` the terminal running maximum.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path::{hitting_time, project_scaled, running_max, BarrierPair, SampleVector, StepPath};

/// Growth class of a payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `|g| <= bound` everywhere.
    Bounded(f64),
    /// `|g(x)| <= a + b |x|`.
    Linear { a: f64, b: f64 },
}

/// A payoff `g : R^{4m+1} -> R`.
pub trait Payoff: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn eval(&self, args: &[f64]) -> f64;
    fn growth(&self) -> Growth;
    /// Distance from `args` to the set where `g` is discontinuous; `None`
    /// when `g` is continuous everywhere.
    fn locus_distance(&self, _args: &[f64]) -> Option<f64> {
        None
    }
}

#[inline]
fn block_m(args: &[f64]) -> usize {
    (args.len() - 1) / 4
}

/// `g = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPayoff(pub f64);

impl Payoff for ConstantPayoff {
    fn name(&self) -> &str {
        "constant"
    }
    fn eval(&self, _args: &[f64]) -> f64 {
        self.0
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(self.0.abs())
    }
}

/// Continuously monitored up-and-in call:
/// `e^{-r} (x_{2m} - K)^+ 1[x_{4m} >= H]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpAndInCall {
    pub strike: f64,
    pub barrier_level: f64,
    pub r: f64,
}

impl Payoff for UpAndInCall {
    fn name(&self) -> &str {
        "up_in_call"
    }
    fn eval(&self, args: &[f64]) -> f64 {
        let m = block_m(args);
        let terminal = args[2 * m - 1];
        let running_max = args[4 * m - 1];
        if running_max >= self.barrier_level {
            (-self.r).exp() * (terminal - self.strike).max(0.0)
        } else {
            0.0
        }
    }
    fn growth(&self) -> Growth {
        Growth::Linear { a: 0.0, b: (-self.r).exp() }
    }
    fn locus_distance(&self, args: &[f64]) -> Option<f64> {
        let m = block_m(args);
        Some((args[4 * m - 1] - self.barrier_level).abs())
    }
}

/// Discretely monitored up-and-in call:
/// `e^{-r} (x_{2m} - K)^+ 1[max_{m < i <= 2m} x_i >= H]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteBarrierCall {
    pub strike: f64,
    pub barrier_level: f64,
    pub r: f64,
}

impl DiscreteBarrierCall {
    fn monitored_max(args: &[f64]) -> f64 {
        let m = block_m(args);
        args[m..2 * m].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl Payoff for DiscreteBarrierCall {
    fn name(&self) -> &str {
        "discrete_barrier_call"
    }
    fn eval(&self, args: &[f64]) -> f64 {
        let m = block_m(args);
        if Self::monitored_max(args) >= self.barrier_level {
            (-self.r).exp() * (args[2 * m - 1] - self.strike).max(0.0)
        } else {
            0.0
        }
    }
    fn growth(&self) -> Growth {
        Growth::Linear { a: 0.0, b: (-self.r).exp() }
    }
    fn locus_distance(&self, args: &[f64]) -> Option<f64> {
        Some((Self::monitored_max(args) - self.barrier_level).abs())
    }
}

/// Shape of a payoff on the terminal value `x_{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalKind {
    Call,
    Put,
    /// The terminal value itself.
    Value,
}

/// `e^{-r} f(x_{2m})` with `f` a call, put or the identity. The put reads
/// `(K - max(x, 0))^+` so it stays bounded when a scheme leaves the positive
/// half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalPayoff {
    pub kind: TerminalKind,
    pub strike: f64,
    pub r: f64,
}

impl Payoff for TerminalPayoff {
    fn name(&self) -> &str {
        "custom_terminal"
    }
    fn eval(&self, args: &[f64]) -> f64 {
        let x = args[2 * block_m(args) - 1];
        let raw = match self.kind {
            TerminalKind::Call => (x - self.strike).max(0.0),
            TerminalKind::Put => (self.strike - x.max(0.0)).max(0.0),
            TerminalKind::Value => x,
        };
        (-self.r).exp() * raw
    }
    fn growth(&self) -> Growth {
        let disc = (-self.r).exp();
        match self.kind {
            TerminalKind::Put => Growth::Bounded(disc * self.strike.max(0.0)),
            TerminalKind::Call | TerminalKind::Value => Growth::Linear { a: 0.0, b: disc },
        }
    }
}

/// `g = tau`, the exit time itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitTimePayoff;

impl Payoff for ExitTimePayoff {
    fn name(&self) -> &str {
        "exit_time"
    }
    fn eval(&self, args: &[f64]) -> f64 {
        args[args.len() - 1]
    }
    fn growth(&self) -> Growth {
        Growth::Bounded(1.0)
    }
}

pub fn payoff_up_and_in_call(strike: f64, barrier_level: f64, r: f64) -> Result<Arc<dyn Payoff>> {
    if !(barrier_level > 0.0) {
        return Err(Error::Domain(format!("barrier level must be > 0, got {barrier_level}")));
    }
    Ok(Arc::new(UpAndInCall { strike, barrier_level, r }))
}

/// Discrete-monitoring up-and-in call; pair it with `nu2 = (1/m, ..., 1)`.
pub fn payoff_discrete_barrier_call(strike: f64, barrier_level: f64, r: f64, m: usize) -> Result<Arc<dyn Payoff>> {
    if m == 0 {
        return Err(Error::Domain("monitoring count m must be at least 1".into()));
    }
    if !(barrier_level > 0.0) {
        return Err(Error::Domain(format!("barrier level must be > 0, got {barrier_level}")));
    }
    Ok(Arc::new(DiscreteBarrierCall { strike, barrier_level, r }))
}

/// Everything needed to evaluate `G` on one path.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub nu1: SampleVector,
    pub nu2: SampleVector,
    pub nu3: SampleVector,
    pub nu4: SampleVector,
    pub payoff: Arc<dyn Payoff>,
    pub barriers: BarrierPair,
    /// State coordinate observed on multi-dimensional paths.
    pub coordinate: usize,
}

impl FunctionalSpec {
    pub fn new(
        nu: [SampleVector; 4],
        payoff: Arc<dyn Payoff>,
        barriers: BarrierPair,
    ) -> Result<Self> {
        let m = nu[0].len();
        if nu.iter().any(|v| v.len() != m) {
            return Err(Error::Domain("all four sample vectors must have the same length".into()));
        }
        let [nu1, nu2, nu3, nu4] = nu;
        Ok(Self { nu1, nu2, nu3, nu4, payoff, barriers, coordinate: 0 })
    }

    /// All four sample vectors equal to `(1/m, ..., 1)`.
    pub fn uniform(m: usize, payoff: Arc<dyn Payoff>, barriers: BarrierPair) -> Result<Self> {
        let nu = SampleVector::uniform(m)?;
        Self::new([nu.clone(), nu.clone(), nu.clone(), nu], payoff, barriers)
    }

    pub fn with_coordinate(mut self, coordinate: usize) -> Self {
        self.coordinate = coordinate;
        self
    }

    pub fn m(&self) -> usize {
        self.nu1.len()
    }
}

/// The `4m + 1` observables fed to the payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PathObservables {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub z3: Vec<f64>,
    pub z4: Vec<f64>,
    pub tau: f64,
}

impl PathObservables {
    pub fn args(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * self.z1.len() + 1);
        v.extend_from_slice(&self.z1);
        v.extend_from_slice(&self.z2);
        v.extend_from_slice(&self.z3);
        v.extend_from_slice(&self.z4);
        v.push(self.tau);
        v
    }
}

pub fn observe(path: &StepPath, spec: &FunctionalSpec) -> Result<PathObservables> {
    let owned;
    let x = if path.is_scalar() && spec.coordinate == 0 {
        path
    } else {
        owned = path.coordinate(spec.coordinate)?;
        &owned
    };
    let tau = hitting_time(x, &spec.barriers)?;
    let xmax = running_max(x)?;
    Ok(PathObservables {
        z1: project_scaled(x, &spec.nu1, tau)?,
        z2: project_scaled(x, &spec.nu2, 1.0)?,
        z3: project_scaled(&xmax, &spec.nu3, tau)?,
        z4: project_scaled(&xmax, &spec.nu4, 1.0)?,
        tau,
    })
}

/// `G(path)`.
pub fn evaluate(path: &StepPath, spec: &FunctionalSpec) -> Result<f64> {
    let obs = observe(path, spec)?;
    let value = spec.payoff.eval(&obs.args());
    if !value.is_finite() {
        return Err(Error::NonFinitePayoff { value, tau: obs.tau });
    }
    Ok(value)
}

/// Samples closer than this fraction to the locus count as flagged.
pub const DISCONTINUITY_FLAG_FREQUENCY: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscontinuityReport {
    pub delta: f64,
    pub n: usize,
    /// Fraction of paths whose observables lie within `delta` of the locus.
    pub frequency: f64,
    pub flagged: bool,
}

/// Fraction of sampled observables within `delta` of the payoff's
/// discontinuity locus. Should vanish as `delta -> 0` when the payoff is
/// almost surely continuous under the law of the observables.
pub fn discontinuity_mass_estimate(spec: &FunctionalSpec, paths: &[StepPath], delta: f64) -> Result<DiscontinuityReport> {
    let mut hits = 0usize;
    for p in paths {
        let args = observe(p, spec)?.args();
        if spec.payoff.locus_distance(&args).is_some_and(|dist| dist < delta) {
            hits += 1;
        }
    }
    let frequency = if paths.is_empty() { 0.0 } else { hits as f64 / paths.len() as f64 };
    Ok(DiscontinuityReport {
        delta,
        n: paths.len(),
        frequency,
        flagged: frequency > DISCONTINUITY_FLAG_FREQUENCY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monthly_path(monitored: &[f64]) -> StepPath {
        let times = (0..=12).map(|i| i as f64 / 12.0).collect();
        let mut values = vec![0.8];
        values.extend_from_slice(monitored);
        StepPath::scalar(times, values).unwrap()
    }

    fn discrete_spec(r: f64) -> FunctionalSpec {
        FunctionalSpec::uniform(
            12,
            payoff_discrete_barrier_call(0.5, 1.0, r, 12).unwrap(),
            BarrierPair::upper_only(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn infinite_barriers_give_unit_tau() {
        let p = StepPath::sample_fn(100, |t| t.sin()).unwrap();
        let nu = SampleVector::new(vec![0.2, 0.7]).unwrap();
        let spec = FunctionalSpec::new(
            [nu.clone(), nu.clone(), nu.clone(), nu.clone()],
            Arc::new(ConstantPayoff(1.0)),
            BarrierPair::unbounded(),
        )
        .unwrap();
        let obs = observe(&p, &spec).unwrap();
        assert_eq!(obs.tau, 1.0);
        assert_eq!(obs.z1, crate::path::project(&p, &nu).unwrap());
    }

    #[test]
    fn unit_nu1_repeats_value_at_tau() {
        let p = StepPath::sample_fn(100, |t| 3.0 * t).unwrap();
        let ones = SampleVector::repeated(1.0, 3).unwrap();
        let u = SampleVector::uniform(3).unwrap();
        let spec = FunctionalSpec::new(
            [ones, u.clone(), u.clone(), u],
            Arc::new(ConstantPayoff(0.0)),
            BarrierPair::upper_only(1.0).unwrap(),
        )
        .unwrap();
        let obs = observe(&p, &spec).unwrap();
        let at_tau = p.eval_scalar(obs.tau).unwrap();
        assert!(obs.z1.iter().all(|&v| v == at_tau));
        assert!(at_tau >= 1.0);
    }

    #[test]
    fn tangent_parabola_observables() {
        let p = StepPath::sample_fn(1000, |s| 1.0 - (s - 0.5) * (s - 0.5)).unwrap();
        let spec = FunctionalSpec::uniform(
            4,
            Arc::new(ExitTimePayoff),
            BarrierPair::upper_only(1.0).unwrap(),
        )
        .unwrap();
        let obs = observe(&p, &spec).unwrap();
        assert_eq!(obs.tau, 0.5);
        assert_eq!(*obs.z4.last().unwrap(), 1.0);
        assert_eq!(evaluate(&p, &spec).unwrap(), 0.5);
    }

    #[test]
    fn constant_payoff() {
        let spec = FunctionalSpec::uniform(2, Arc::new(ConstantPayoff(3.25)), BarrierPair::unbounded()).unwrap();
        let p = StepPath::sample_fn(10, |t| t * t).unwrap();
        assert_eq!(evaluate(&p, &spec).unwrap(), 3.25);
    }

    #[test]
    fn discrete_barrier_arithmetic() {
        let mut monitored = vec![0.9; 12];
        monitored[5] = 1.1;
        monitored[11] = 0.6;
        let v = evaluate(&monthly_path(&monitored), &discrete_spec(0.1)).unwrap();
        assert!((v - (-0.1f64).exp() * 0.1).abs() < 1e-15);

        monitored[11] = 0.4;
        assert_eq!(evaluate(&monthly_path(&monitored), &discrete_spec(0.1)).unwrap(), 0.0);

        let below = vec![0.95; 12];
        assert_eq!(evaluate(&monthly_path(&below), &discrete_spec(0.1)).unwrap(), 0.0);
    }

    #[test]
    fn single_monitor_reduces_to_terminal_check() {
        let g = payoff_discrete_barrier_call(0.5, 1.0, 0.1, 1).unwrap();
        assert_eq!(g.eval(&[0.0, 1.2, 0.0, 0.0, 1.0]), (-0.1f64).exp() * 0.7);
        assert_eq!(g.eval(&[0.0, 0.9, 0.0, 5.0, 1.0]), 0.0);
    }

    #[test]
    fn up_and_in_call_values() {
        let g = payoff_up_and_in_call(0.5, 1.0, 0.1).unwrap();
        // m = 1: [z1, z2, z3, z4, tau]
        assert_eq!(g.eval(&[0.0, 1.0, 0.0, 1.0, 1.0]), (-0.1f64).exp() * 0.5);
        assert_eq!(g.eval(&[0.0, 1.0, 0.0, 0.99, 1.0]), 0.0);
        assert_eq!(g.eval(&[0.0, 0.5, 0.0, 1.5, 1.0]), 0.0);
        assert!(matches!(g.growth(), Growth::Linear { .. }));
        assert!(payoff_up_and_in_call(0.5, 0.0, 0.1).is_err());
    }

    #[test]
    fn discontinuity_mass() {
        let spec = FunctionalSpec::uniform(1, Arc::new(ConstantPayoff(1.0)), BarrierPair::unbounded()).unwrap();
        let paths = vec![StepPath::constant(1.0).unwrap(); 4];
        assert_eq!(discontinuity_mass_estimate(&spec, &paths, 0.1).unwrap().frequency, 0.0);

        let at_barrier = vec![StepPath::constant(1.0).unwrap(); 10];
        let rep = discontinuity_mass_estimate(&discrete_spec(0.0), &at_barrier, 1e-3).unwrap();
        assert_eq!(rep.frequency, 1.0);
        assert!(rep.flagged);
    }

    #[test]
    fn non_finite_payoff_is_an_error() {
        #[derive(Debug)]
        struct Blowup;
        impl Payoff for Blowup {
            fn name(&self) -> &str {
                "blowup"
            }
            fn eval(&self, _: &[f64]) -> f64 {
                f64::INFINITY
            }
            fn growth(&self) -> Growth {
                Growth::Linear { a: 0.0, b: 1.0 }
            }
        }
        let spec = FunctionalSpec::uniform(1, Arc::new(Blowup), BarrierPair::unbounded()).unwrap();
        let err = evaluate(&StepPath::constant(0.0).unwrap(), &spec).unwrap_err();
        assert!(matches!(err, Error::NonFinitePayoff { .. }));
    }
}
