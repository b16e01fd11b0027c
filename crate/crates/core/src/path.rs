//! Piecewise-constant RCLL sample paths on `[0, 1]` and the three path
//! operators used by the functional: projection, running maximum and the
//! first exit time from a time-dependent band.
//!
//! A [`StepPath`] takes the value of the greatest grid time not exceeding
//! `t`. Exit from the band is only tested at grid times; the path carries no
//! information between grid points.

use crate::error::{Error, Result};

/// Right-continuous step path on a grid `0 = t_0 < t_1 < ... < t_N = 1`.
///
/// Values are stored row-major: the state at `times[i]` occupies
/// `values[i * dim .. (i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl StepPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("state dimension must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("empty time grid".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath(format!("grid starts at {} instead of 0", times[0])));
        }
        if *times.last().unwrap() != 1.0 {
            return Err(Error::InvalidPath(format!(
                "grid ends at {} instead of 1",
                times.last().unwrap()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPath(format!(
                "grid not strictly increasing near {} -> {}",
                w[0], w[1]
            )));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "{} values for {} grid times of dimension {}",
                values.len(),
                times.len(),
                dim
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite value {v}")));
        }
        Ok(Self { times, values, dim })
    }

    /// Scalar path from grid times and values.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(times, values, 1)
    }

    /// Constant scalar path on a single-step grid `{0, 1}`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::scalar(vec![0.0, 1.0], vec![value, value])
    }

    /// Samples `f` on the uniform grid `i / n`, `i = 0..=n`.
    pub fn sample_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = n.max(1);
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        Self::scalar(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.dim == 1
    }

    /// State at grid index `i`.
    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the grid interval covering `t`, i.e. `max { j : times[j] <= t }`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("evaluation time {t} outside [0, 1]")));
        }
        Ok(self.covering_index(t))
    }

    #[inline]
    fn covering_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Path value at `t`.
    pub fn eval(&self, t: f64) -> Result<&[f64]> {
        Ok(self.state(self.index_at(t)?))
    }

    /// Scalar path value at `t`. Fails on multi-dimensional paths.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        self.require_scalar("eval_scalar")?;
        Ok(self.values[self.index_at(t)?])
    }

    /// Extracts one state coordinate as a scalar path.
    pub fn coordinate(&self, k: usize) -> Result<StepPath> {
        if k >= self.dim {
            return Err(Error::Dimension(format!(
                "coordinate {k} requested from a {}-dimensional path",
                self.dim
            )));
        }
        if self.dim == 1 {
            return Ok(self.clone());
        }
        let values = self.values.iter().skip(k).step_by(self.dim).copied().collect();
        Ok(StepPath { times: self.times.clone(), values, dim: 1 })
    }

    /// Same path on a grid refined with redundant points. The step function
    /// is unchanged.
    pub fn refined(&self, extra: &[f64]) -> Result<StepPath> {
        let mut times: Vec<f64> = self.times.iter().copied().chain(
            extra.iter().copied().filter(|t| (0.0..=1.0).contains(t)),
        ).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut values = Vec::with_capacity(times.len() * self.dim);
        for &t in &times {
            values.extend_from_slice(self.state(self.covering_index(t)));
        }
        StepPath::new(times, values, self.dim)
    }

    /// Adds `shift` to every value.
    pub fn shifted(&self, shift: f64) -> StepPath {
        StepPath {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v + shift).collect(),
            dim: self.dim,
        }
    }

    fn require_scalar(&self, op: &str) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::Dimension(format!(
                "{op} needs a scalar path, got dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Running maximum `x*(t) = max_{s <= t} x(s)` on the same grid.
pub fn running_max(path: &StepPath) -> Result<StepPath> {
    path.require_scalar("running_max")?;
    let mut acc = f64::NEG_INFINITY;
    let values = path
        .values
        .iter()
        .map(|&v| {
            acc = acc.max(v);
            acc
        })
        .collect();
    Ok(StepPath { times: path.times.clone(), values, dim: 1 })
}

/// Sampling instants `nu in [0, 1]^m`, nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("sample vector must have at least one entry".into()));
        }
        if let Some(v) = entries.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("sample instant {v} outside [0, 1]")));
        }
        if entries.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("sample instants must be nondecreasing".into()));
        }
        Ok(Self(entries))
    }

    /// `(1/m, 2/m, ..., m/m)`.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("m must be at least 1".into()));
        }
        Self::new((1..=m).map(|i| i as f64 / m as f64).collect())
    }

    /// `(t, t, ..., t)` with `m` entries.
    pub fn repeated(t: f64, m: usize) -> Result<Self> {
        Self::new(vec![t; m])
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Projection `(x(nu_1), ..., x(nu_m))` of a scalar path.
pub fn project(path: &StepPath, nu: &SampleVector) -> Result<Vec<f64>> {
    project_scaled(path, nu, 1.0)
}

/// Projection at the scaled instants `scale * nu_i`, `scale in [0, 1]`.
pub fn project_scaled(path: &StepPath, nu: &SampleVector, scale: f64) -> Result<Vec<f64>> {
    path.require_scalar("project")?;
    if !(0.0..=1.0).contains(&scale) {
        return Err(Error::Domain(format!("projection scale {scale} outside [0, 1]")));
    }
    Ok(nu.0.iter().map(|&t| path.values[path.covering_index(scale * t)]).collect())
}

/// A continuous barrier function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Barrier {
    /// No barrier on this side (`-inf` below, `+inf` above).
    Infinite,
    Constant(f64),
    /// Knots `(t, level)` with `t` strictly increasing from 0 to 1, linearly
    /// interpolated.
    Sampled(Vec<(f64, f64)>),
}

impl Barrier {
    fn validate(&self) -> Result<()> {
        match self {
            Barrier::Infinite => Ok(()),
            Barrier::Constant(c) if c.is_finite() => Ok(()),
            Barrier::Constant(c) => Err(Error::InvalidBarrier(format!("non-finite level {c}"))),
            Barrier::Sampled(knots) => {
                if knots.len() < 2 {
                    return Err(Error::InvalidBarrier("sampled barrier needs two knots".into()));
                }
                if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                    return Err(Error::InvalidBarrier("knots must span [0, 1]".into()));
                }
                if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(Error::InvalidBarrier("knot times must increase".into()));
                }
                if knots.iter().any(|k| !k.1.is_finite()) {
                    return Err(Error::InvalidBarrier("non-finite knot level".into()));
                }
                Ok(())
            }
        }
    }

    fn knot_times(&self) -> Vec<f64> {
        match self {
            Barrier::Sampled(knots) => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Level at `t`, with `inf` standing for the infinite barrier; the sign
    /// is applied by [`BarrierPair`].
    fn level(&self, t: f64, infinite: f64) -> f64 {
        match self {
            Barrier::Infinite => infinite,
            Barrier::Constant(c) => *c,
            Barrier::Sampled(knots) => {
                let j = knots.partition_point(|k| k.0 <= t);
                if j == 0 {
                    knots[0].1
                } else if j >= knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let (t0, v0) = knots[j - 1];
                    let (t1, v1) = knots[j];
                    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                }
            }
        }
    }
}

/// Lower and upper barriers `alpha(t) < beta(t)` bounding the band.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierPair {
    lower: Barrier,
    upper: Barrier,
}

const BARRIER_REFERENCE_GRID: usize = 1000;

impl BarrierPair {
    pub fn new(lower: Barrier, upper: Barrier) -> Result<Self> {
        lower.validate()?;
        upper.validate()?;
        let pair = Self { lower, upper };
        let mut grid: Vec<f64> = (0..=BARRIER_REFERENCE_GRID)
            .map(|i| i as f64 / BARRIER_REFERENCE_GRID as f64)
            .collect();
        grid.extend(pair.lower.knot_times());
        grid.extend(pair.upper.knot_times());
        if let Some(t) = grid.iter().find(|&&t| !(pair.alpha(t) < pair.beta(t))) {
            return Err(Error::InvalidBarrier(format!(
                "alpha({t}) = {} is not below beta({t}) = {}",
                pair.alpha(*t),
                pair.beta(*t)
            )));
        }
        Ok(pair)
    }

    /// `(-inf, +inf)`: the path never exits.
    pub fn unbounded() -> Self {
        Self { lower: Barrier::Infinite, upper: Barrier::Infinite }
    }

    /// Constant levels; pass infinities for a one-sided band.
    pub fn constant(lower: f64, upper: f64) -> Result<Self> {
        let side = |v: f64| if v.is_infinite() { Barrier::Infinite } else { Barrier::Constant(v) };
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidBarrier(format!("band ({lower}, {upper}) is empty")));
        }
        Self::new(side(lower), side(upper))
    }

    /// Upper barrier only: `(-inf, level)`.
    pub fn upper_only(level: f64) -> Result<Self> {
        Self::constant(f64::NEG_INFINITY, level)
    }

    pub fn lower(&self) -> &Barrier {
        &self.lower
    }

    pub fn upper(&self) -> &Barrier {
        &self.upper
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.lower.level(t, f64::NEG_INFINITY)
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.upper.level(t, f64::INFINITY)
    }

    pub fn is_unbounded(&self) -> bool {
        matches!((&self.lower, &self.upper), (Barrier::Infinite, Barrier::Infinite))
    }

    #[inline]
    fn outside(&self, value: f64, t: f64) -> bool {
        value <= self.alpha(t) || value >= self.beta(t)
    }
}

/// First grid time at which the path is outside the open band, capped at 1.
pub fn hitting_time(path: &StepPath, barriers: &BarrierPair) -> Result<f64> {
    Ok(first_exit_index(path, barriers)?.map_or(1.0, |i| path.times[i]))
}

fn first_exit_index(path: &StepPath, barriers: &BarrierPair) -> Result<Option<usize>> {
    path.require_scalar("hitting_time")?;
    if barriers.is_unbounded() {
        return Ok(None);
    }
    Ok(path
        .times
        .iter()
        .zip(&path.values)
        .position(|(&t, &v)| barriers.outside(v, t)))
}

/// Classes of the partition of paths by their behaviour at the exit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CPartition {
    /// Exits through the upper barrier and crosses it immediately.
    C1,
    /// Exits through the lower barrier and crosses it immediately.
    C2,
    /// Never exits before the horizon.
    C3,
    /// Everything else; the exit-time map is not continuous here.
    C4,
}

/// Default touching tolerance for a barrier of magnitude `scale`.
pub fn default_touch_tolerance(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

/// Classifies a scalar path into C1..C4.
///
/// The path is in C1 (resp. C2) when it exits through beta (resp. alpha) and
/// lies strictly beyond that barrier (by more than `tol`) either at the exit
/// time itself or at the next grid time; touching without crossing is C4.
pub fn classify_c_partition(path: &StepPath, barriers: &BarrierPair, tol: f64) -> Result<CPartition> {
    let Some(i) = first_exit_index(path, barriers)? else {
        return Ok(CPartition::C3);
    };
    let tau = path.times[i];
    if tau >= 1.0 {
        return Ok(CPartition::C3);
    }
    let beyond_upper = |j: usize| path.values[j] > barriers.beta(path.times[j]) + tol;
    let beyond_lower = |j: usize| path.values[j] < barriers.alpha(path.times[j]) - tol;
    let v = path.values[i];
    let next = i + 1;
    if v >= barriers.beta(tau) - tol {
        if beyond_upper(i) || (next < path.len() && beyond_upper(next)) {
            return Ok(CPartition::C1);
        }
    } else if v <= barriers.alpha(tau) + tol
        && (beyond_lower(i) || (next < path.len() && beyond_lower(next)))
    {
        return Ok(CPartition::C2);
    }
    Ok(CPartition::C4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola(n: usize) -> StepPath {
        StepPath::sample_fn(n, |s| 1.0 - (s - 0.5) * (s - 0.5)).unwrap()
    }

    #[test]
    fn eval_uses_step_convention() {
        let p = StepPath::scalar(vec![0.0, 0.5, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.eval_scalar(0.7).unwrap(), 2.0);
        assert_eq!(p.eval_scalar(0.0).unwrap(), 1.0);
        assert_eq!(p.eval_scalar(0.5).unwrap(), 2.0);
        assert_eq!(p.eval_scalar(1.0).unwrap(), 3.0);
        assert!(matches!(p.eval_scalar(1.5), Err(Error::Domain(_))));
        assert!(matches!(p.eval_scalar(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_rejects_bad_grids() {
        assert!(StepPath::scalar(vec![0.1, 1.0], vec![0.0, 0.0]).is_err());
        assert!(StepPath::scalar(vec![0.0, 0.9], vec![0.0, 0.0]).is_err());
        assert!(StepPath::scalar(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(StepPath::scalar(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(StepPath::scalar(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn running_max_examples() {
        let p = StepPath::scalar(vec![0.0, 0.5, 1.0], vec![0.2, -0.1, 0.5]).unwrap();
        assert_eq!(running_max(&p).unwrap().values(), &[0.2, 0.2, 0.5]);

        let mono = StepPath::scalar(vec![0.0, 0.3, 1.0], vec![-1.0, 0.0, 4.0]).unwrap();
        assert_eq!(running_max(&mono).unwrap(), mono);

        let m = running_max(&parabola(1000)).unwrap();
        assert_eq!(m.eval_scalar(1.0).unwrap(), 1.0);
    }

    #[test]
    fn projection_examples() {
        let p = StepPath::scalar(vec![0.0, 0.25, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        let terminal = SampleVector::new(vec![1.0]).unwrap();
        assert_eq!(project(&p, &terminal).unwrap(), vec![3.0]);
        let mid = SampleVector::new(vec![0.1, 0.6]).unwrap();
        assert_eq!(project(&p, &mid).unwrap(), vec![1.0, 2.0]);

        let monthly = SampleVector::uniform(12).unwrap();
        let path = StepPath::sample_fn(12_000, |t| t).unwrap();
        let z = project(&path, &monthly).unwrap();
        for (i, v) in z.iter().enumerate() {
            assert_eq!(*v, (i + 1) as f64 / 12.0);
        }
    }

    #[test]
    fn sample_vector_validation() {
        assert!(SampleVector::new(vec![]).is_err());
        assert!(SampleVector::new(vec![0.5, 0.4]).is_err());
        assert!(SampleVector::new(vec![1.1]).is_err());
        assert_eq!(SampleVector::uniform(4).unwrap().entries(), &[0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn tangency_hitting_times() {
        let beta = BarrierPair::upper_only(1.0).unwrap();
        let x = parabola(1000);
        assert_eq!(hitting_time(&x, &beta).unwrap(), 0.5);
        for h in [0.1, 0.01, 0.001] {
            assert_eq!(hitting_time(&x.shifted(-h), &beta).unwrap(), 1.0);
        }
        let zero = StepPath::constant(0.0).unwrap();
        let band = BarrierPair::constant(-1.0, 1.0).unwrap();
        assert_eq!(hitting_time(&zero, &band).unwrap(), 1.0);
    }

    #[test]
    fn partition_classes() {
        let beta = BarrierPair::upper_only(1.0).unwrap();
        let tol = default_touch_tolerance(1.0);
        assert_eq!(
            classify_c_partition(&StepPath::constant(0.0).unwrap(), &beta, tol).unwrap(),
            CPartition::C3
        );
        let crossing = StepPath::sample_fn(100, |t| 2.0 * t).unwrap();
        assert_eq!(classify_c_partition(&crossing, &beta, tol).unwrap(), CPartition::C1);
        let band = BarrierPair::constant(-1.0, 1.0).unwrap();
        let falling = StepPath::sample_fn(100, |t| -2.0 * t).unwrap();
        assert_eq!(classify_c_partition(&falling, &band, tol).unwrap(), CPartition::C2);
        assert_eq!(classify_c_partition(&parabola(1000), &beta, tol).unwrap(), CPartition::C4);
    }

    #[test]
    fn barrier_validation_and_interpolation() {
        assert!(BarrierPair::constant(1.0, 1.0).is_err());
        assert!(BarrierPair::constant(f64::INFINITY, 1.0).is_err());
        let upper = Barrier::Sampled(vec![(0.0, 1.0), (1.0, 2.0)]);
        let pair = BarrierPair::new(Barrier::Constant(0.0), upper).unwrap();
        assert!((pair.beta(0.25) - 1.25).abs() < 1e-15);
        let crossing = Barrier::Sampled(vec![(0.0, 1.0), (1.0, -1.0)]);
        assert!(BarrierPair::new(Barrier::Constant(0.0), crossing).is_err());
        assert_eq!(BarrierPair::unbounded().alpha(0.3), f64::NEG_INFINITY);
    }

    #[test]
    fn coordinate_extraction() {
        let p = StepPath::new(vec![0.0, 1.0], vec![1.0, 10.0, 2.0, 20.0], 2).unwrap();
        assert_eq!(p.coordinate(1).unwrap().values(), &[10.0, 20.0]);
        assert!(p.coordinate(2).is_err());
        assert!(running_max(&p).is_err());
    }
}
