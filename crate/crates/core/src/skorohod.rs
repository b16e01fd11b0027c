//! Approximate Skorohod distance between step paths, and probes of the
//! continuity of the running maximum and the exit time.
//!
//! The distance is `inf_lambda max(|lambda - I|, |x o lambda - y|)` over
//! increasing bijections of `[0, 1]`. We take the minimum over a finite
//! family of piecewise-linear time changes (the identity plus matchings of
//! jump times), so the value is an upper bound on the true distance and
//! never exceeds the sup-norm distance.

use crate::error::{Error, Result};
use crate::path::{classify_c_partition, default_touch_tolerance, hitting_time, running_max, BarrierPair, CPartition, StepPath};

/// Default number of interior knots a candidate time change may use.
pub const DEFAULT_BUDGET: usize = 64;

/// Largest number of single-knot candidates tried per direction.
const MAX_SINGLE_KNOT: usize = 4096;

/// Increasing piecewise-linear bijection of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    /// `(s, lambda(s))`, starting at `(0, 0)` and ending at `(1, 1)`.
    knots: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn identity() -> Self {
        Self { knots: vec![(0.0, 0.0), (1.0, 1.0)] }
    }

    /// Builds a time change through the given interior knots.
    pub fn new(interior: Vec<(f64, f64)>) -> Result<Self> {
        let mut knots = Vec::with_capacity(interior.len() + 2);
        knots.push((0.0, 0.0));
        knots.extend(interior);
        knots.push((1.0, 1.0));
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::Domain(format!(
                    "time change must be strictly increasing, got {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_identity(&self) -> bool {
        self.knots.len() == 2
    }

    /// `lambda(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        interpolate(&self.knots, s, |k| k.0, |k| k.1)
    }

    /// `lambda^{-1}(u)`.
    pub fn inverse_eval(&self, u: f64) -> f64 {
        interpolate(&self.knots, u, |k| k.1, |k| k.0)
    }

    pub fn inverse(&self) -> Self {
        Self { knots: self.knots.iter().map(|&(a, b)| (b, a)).collect() }
    }

    /// `sup |lambda(s) - s|`, attained at a knot.
    pub fn sup_deviation(&self) -> f64 {
        self.knots.iter().map(|(s, l)| (l - s).abs()).fold(0.0, f64::max)
    }
}

fn interpolate(knots: &[(f64, f64)], v: f64, from: impl Fn(&(f64, f64)) -> f64, to: impl Fn(&(f64, f64)) -> f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    let j = knots.partition_point(|k| from(k) <= v);
    if j == 0 {
        return to(&knots[0]);
    }
    let a = &knots[j - 1];
    if from(a) == v || j == knots.len() {
        return to(a);
    }
    let b = &knots[j];
    to(a) + (v - from(a)) * (to(b) - to(a)) / (from(b) - from(a))
}

fn scalar_values(p: &StepPath) -> Result<&[f64]> {
    if !p.is_scalar() {
        return Err(Error::Dimension("Skorohod distance needs scalar paths".into()));
    }
    Ok(p.values())
}

/// `sup_t |x(lambda(t)) - y(t)|` for step paths.
fn composed_sup(x: &StepPath, y: &StepPath, lambda: &TimeChange) -> Result<f64> {
    let xv = scalar_values(x)?;
    let yv = scalar_values(y)?;
    // x o lambda switches to x_j at u_j = lambda^{-1}(s_j)
    let mut u: Vec<f64> = x.times().iter().map(|&s| lambda.inverse_eval(s)).collect();
    for j in 1..u.len() {
        u[j] = u[j].max(u[j - 1]);
    }
    let yt = y.times();
    let (mut i, mut k) = (0usize, 0usize);
    let mut sup = 0.0f64;
    loop {
        let next_u = u.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let next_t = yt.get(k + 1).copied().unwrap_or(f64::INFINITY);
        sup = sup.max((xv[i] - yv[k]).abs());
        let p = next_u.min(next_t);
        if !p.is_finite() || p > 1.0 {
            break;
        }
        while u.get(i + 1).is_some_and(|&v| v <= p) {
            i += 1;
        }
        while yt.get(k + 1).is_some_and(|&v| v <= p) {
            k += 1;
        }
    }
    Ok(sup)
}

/// `max(|lambda - I|, |x o lambda - y|)`.
pub fn distance_under(x: &StepPath, y: &StepPath, lambda: &TimeChange) -> Result<f64> {
    Ok(lambda.sup_deviation().max(composed_sup(x, y, lambda)?))
}

/// Sup-norm distance on the merged grid.
pub fn sup_distance(x: &StepPath, y: &StepPath) -> Result<f64> {
    composed_sup(x, y, &TimeChange::identity())
}

/// Best candidate found by [`skorohod_distance_with_lambda`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkorohodMatch {
    pub distance: f64,
    pub lambda: TimeChange,
    /// The time change acts on `y` instead of `x`: the distance is
    /// `max(|lambda - I|, |y o lambda - x|)`.
    pub swapped: bool,
}

impl SkorohodMatch {
    /// Evaluates the same time change on another pair of paths.
    pub fn apply(&self, x: &StepPath, y: &StepPath) -> Result<f64> {
        if self.swapped {
            distance_under(y, x, &self.lambda)
        } else {
            distance_under(x, y, &self.lambda)
        }
    }
}

/// Interior jump times of a scalar step path with the jump sizes.
fn jumps(p: &StepPath) -> Vec<(f64, f64)> {
    let v = p.values();
    p.times()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(i, &t)| t > 0.0 && t < 1.0 && v[i] != v[i - 1])
        .map(|(i, &t)| (t, v[i] - v[i - 1]))
        .collect()
}

/// Time change sending each `y` jump time `b` to the matched `x` jump `a`.
fn matching(pairs: &[(f64, f64)]) -> Option<TimeChange> {
    TimeChange::new(pairs.iter().map(|&(a, b)| (b, a)).collect()).ok()
}

fn candidates(x: &StepPath, y: &StepPath, bound: f64, budget: usize) -> Vec<TimeChange> {
    let jx = jumps(x);
    let jy = jumps(y);
    let mut out = Vec::new();
    if jx.is_empty() || jy.is_empty() || budget == 0 {
        return out;
    }

    // single knots, nearest pairs first
    let mut pairs: Vec<(f64, f64, f64)> = Vec::new();
    for &(a, _) in &jx {
        let lo = jy.partition_point(|&(b, _)| b < a - bound);
        for &(b, _) in jy[lo..].iter().take_while(|&&(b, _)| b <= a + bound) {
            if a != b {
                pairs.push(((a - b).abs(), a, b));
            }
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    out.extend(pairs.iter().take(MAX_SINGLE_KNOT).filter_map(|&(_, a, b)| matching(&[(a, b)])));

    // all jumps in order, when the counts agree
    if jx.len() == jy.len() && jx.len() <= budget {
        let all: Vec<(f64, f64)> = jx.iter().zip(&jy).map(|(a, b)| (a.0, b.0)).collect();
        out.extend(matching(&all));
    }

    // the k largest jumps of each path, in time order
    let k = budget.min(jx.len()).min(jy.len());
    let largest = |j: &[(f64, f64)]| {
        let mut v = j.to_vec();
        v.sort_by(|p, q| q.1.abs().total_cmp(&p.1.abs()));
        v.truncate(k);
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        v
    };
    let (lx, ly) = (largest(&jx), largest(&jy));
    let big: Vec<(f64, f64)> = lx.iter().zip(&ly).map(|(a, b)| (a.0, b.0)).collect();
    out.extend(matching(&big));

    // greedy monotone matching of each y jump to the nearest later x jump
    // of the same sign
    let mut greedy = Vec::new();
    let mut start = 0usize;
    for &(b, db) in &jy {
        if greedy.len() >= budget {
            break;
        }
        let best = jx[start..]
            .iter()
            .enumerate()
            .filter(|(_, (a, da))| (a - b).abs() < bound && da.signum() == db.signum())
            .min_by(|p, q| (p.1 .0 - b).abs().total_cmp(&(q.1 .0 - b).abs()));
        if let Some((off, &(a, _))) = best {
            greedy.push((a, b));
            start += off + 1;
        }
    }
    if greedy.len() > 1 {
        out.extend(matching(&greedy));
    }
    out
}

fn best_one_way(x: &StepPath, y: &StepPath, budget: usize) -> Result<(f64, TimeChange)> {
    let identity = TimeChange::identity();
    let mut best = (composed_sup(x, y, &identity)?, identity);
    for lambda in candidates(x, y, best.0, budget) {
        if lambda.sup_deviation() >= best.0 {
            continue;
        }
        let d = distance_under(x, y, &lambda)?;
        if d < best.0 {
            best = (d, lambda);
        }
    }
    Ok(best)
}

/// Approximate Skorohod distance together with the time change attaining
/// it. Symmetric: both directions are searched and the smaller value kept.
pub fn skorohod_distance_with_lambda(x: &StepPath, y: &StepPath, budget: usize) -> Result<SkorohodMatch> {
    let (d_xy, l_xy) = best_one_way(x, y, budget)?;
    let (d_yx, l_yx) = best_one_way(y, x, budget)?;
    Ok(if d_yx < d_xy {
        SkorohodMatch { distance: d_yx, lambda: l_yx, swapped: true }
    } else {
        SkorohodMatch { distance: d_xy, lambda: l_xy, swapped: false }
    })
}

/// Approximate Skorohod distance; an upper bound on the true value.
pub fn skorohod_distance_approx(x: &StepPath, y: &StepPath, budget: usize) -> Result<f64> {
    Ok(skorohod_distance_with_lambda(x, y, budget)?.distance)
}

/// Slack allowed in the continuity inequalities.
pub const PROBE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxProbeRow {
    /// `d(x_n, x)`.
    pub path_distance: f64,
    /// `d(M(x_n), M(x))`.
    pub max_distance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxProbeReport {
    pub rows: Vec<MaxProbeRow>,
    pub pass: bool,
}

/// Checks `d(M(x_n), M(x)) <= d(x_n, x)` along the perturbations. The time
/// change that realises `d(x_n, x)` is reused for the running maxima, since
/// `M(x o lambda) = M(x) o lambda` and `M` is 1-Lipschitz in sup norm.
pub fn continuity_probe_max(x: &StepPath, perturbations: &[StepPath], budget: usize) -> Result<MaxProbeReport> {
    let mx = running_max(x)?;
    let rows = perturbations
        .iter()
        .map(|xn| {
            let m = skorohod_distance_with_lambda(xn, x, budget)?;
            let mxn = running_max(xn)?;
            let max_distance = skorohod_distance_approx(&mxn, &mx, budget)?.min(m.apply(&mxn, &mx)?);
            Ok(MaxProbeRow {
                path_distance: m.distance,
                max_distance,
                holds: max_distance <= m.distance + PROBE_TOLERANCE,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.holds);
    Ok(MaxProbeReport { rows, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub enum HittingProbeReport {
    /// The exit-time map need not be continuous at C4 paths.
    NotApplicable(CPartition),
    Checked {
        class: CPartition,
        tau: f64,
        taus: Vec<f64>,
        errors: Vec<f64>,
        pass: bool,
    },
}

impl HittingProbeReport {
    pub fn pass(&self) -> Option<bool> {
        match self {
            Self::NotApplicable(_) => None,
            Self::Checked { pass, .. } => Some(*pass),
        }
    }
}

/// Checks `pi(x_n) -> pi(x)`: errors nonincreasing over the last three
/// perturbations and the final error at most `tol`.
pub fn continuity_probe_hitting(
    x: &StepPath,
    barriers: &BarrierPair,
    perturbations: &[StepPath],
    tol: f64,
) -> Result<HittingProbeReport> {
    let scale = x.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let class = classify_c_partition(x, barriers, default_touch_tolerance(scale))?;
    if class == CPartition::C4 {
        return Ok(HittingProbeReport::NotApplicable(class));
    }
    let tau = hitting_time(x, barriers)?;
    let taus = perturbations
        .iter()
        .map(|p| hitting_time(p, barriers))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = taus.iter().map(|t| (t - tau).abs()).collect();
    let tail = &errors[errors.len().saturating_sub(3)..];
    let pass = !errors.is_empty()
        && tail.windows(2).all(|w| w[1] <= w[0])
        && errors.last().is_some_and(|e| *e <= tol);
    Ok(HittingProbeReport::Checked { class, tau, taus, errors, pass })
}
