//! Monte Carlo estimation of `V^h = E[G(X^h)]`, uniform-integrability
//! diagnostics and convergence studies over the step parameter.
//!
//! Paths are grouped in fixed chunks of [`CHUNK_PATHS`] consecutive stream
//! ids. Each chunk is reduced with Welford's recurrence and the chunk
//! summaries are merged in chunk order, so the result does not depend on how
//! many workers ran the chunks.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{evaluate, FunctionalSpec, Growth};
use crate::models::SdeModel;
use crate::rng::RngStream;
use crate::schemes::{PathSource, SchemeConfig, SchemeSimulator};

/// Number of consecutive paths reduced together before merging.
pub const CHUNK_PATHS: usize = 64;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.5758;

/// Count, mean and centred sum of squares of a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(self, other: RunningStats) -> RunningStats {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        RunningStats {
            n,
            mean: self.mean + delta * nb / nn,
            m2: self.m2 + other.m2 + delta * delta * na * nb / nn,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Number of workers used when none is requested.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let workers = if workers == 0 { default_workers() } else { workers };
    if workers == 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(job))
}

fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK_PATHS))
        .map(|c| (c * CHUNK_PATHS, ((c + 1) * CHUNK_PATHS).min(n)))
        .collect()
}

fn tag(stream: u64, e: Error) -> Error {
    match e {
        e @ Error::Stream { .. } => e,
        e => Error::Stream { stream, source: Box::new(e) },
    }
}

/// Applies `f` to stream ids `0..n` and reduces the outputs in a fixed order.
/// The first failing stream (lowest id) is reported.
pub fn reduce_paths<F>(n: usize, workers: usize, f: F) -> Result<RunningStats>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    let chunks = chunk_ranges(n);
    let partials: Vec<Result<RunningStats>> = with_pool(workers, || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut s = RunningStats::default();
                for i in lo..hi {
                    s.push(f(i as u64).map_err(|e| tag(i as u64, e))?);
                }
                Ok(s)
            })
            .collect()
    })?;
    partials
        .into_iter()
        .try_fold(RunningStats::default(), |acc, p| Ok(acc.merge(p?)))
}

/// Applies `f` to stream ids `0..n` and returns the outputs in id order.
pub fn collect_paths<T, F>(n: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    with_pool(workers, || {
        (0..n as u64)
            .into_par_iter()
            .map(|i| f(i).map_err(|e| tag(i, e)))
            .collect()
    })?
}

/// Point estimate with its normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub n_paths: usize,
    pub h: f64,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

impl Estimate {
    fn from_stats(stats: RunningStats, h: f64, elapsed: f64) -> Self {
        let stderr = stats.stderr();
        Self {
            mean: stats.mean,
            stderr,
            ci95: (stats.mean - Z95 * stderr, stats.mean + Z95 * stderr),
            n_paths: stats.n as usize,
            h,
            elapsed,
        }
    }
}

/// Execution settings shared by the estimation entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 means one per available CPU.
    pub workers: usize,
    /// Skip the uniform-integrability gate for linear-growth payoffs.
    pub override_ui: bool,
    /// Paths per step size in the gate's diagnostic.
    pub ui_paths: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 0, override_ui: false, ui_paths: 1000 }
    }
}

impl RunOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_override_ui(mut self, override_ui: bool) -> Self {
        self.override_ui = override_ui;
        self
    }
}

/// Seed offset that keeps the gate's draws apart from the main run.
const UI_SEED_SALT: u64 = 0x5549_5f47_4154_4521;

/// `V^h` for a model and scheme, with default options.
pub fn estimate(model: &SdeModel, config: &SchemeConfig, spec: &FunctionalSpec, n_paths: usize, seed: u64) -> Result<Estimate> {
    estimate_with(model, config, spec, n_paths, seed, &RunOptions::default())
}

/// `V^h` for a model and scheme. Linear-growth payoffs are refused unless
/// the uniform-integrability diagnostic passes on `{4h, 2h, h}` or the
/// override is set.
pub fn estimate_with(
    model: &SdeModel,
    config: &SchemeConfig,
    spec: &FunctionalSpec,
    n_paths: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Estimate> {
    let sim = SchemeSimulator::new(model.clone(), *config)?;
    if matches!(spec.payoff.growth(), Growth::Linear { .. }) && !options.override_ui {
        let h = config.h;
        let report = ui_diagnostic(
            model,
            config,
            spec,
            &[4.0 * h, 2.0 * h, h],
            options.ui_paths,
            seed ^ UI_SEED_SALT,
            options.workers,
        )?;
        if !report.pass {
            return Err(Error::UiRefused(format!(
                "tail mean {:.4e} at cutoff {} exceeds {:.4e}",
                report.worst_tail, report.largest_cutoff(), report.threshold
            )));
        }
    }
    estimate_source(&sim, spec, n_paths, seed, options.workers)
}

/// `V^h` for an arbitrary path source, without the growth gate.
pub fn estimate_source(
    source: &dyn PathSource,
    spec: &FunctionalSpec,
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<Estimate> {
    if n_paths < 2 {
        return Err(Error::Domain(format!("need at least 2 paths, got {n_paths}")));
    }
    let start = Instant::now();
    let stats = reduce_paths(n_paths, workers, |i| {
        let path = source.simulate(RngStream::new(seed, i))?;
        evaluate(&path, spec)
    })?;
    Ok(Estimate::from_stats(stats, source.h(), start.elapsed().as_secs_f64()))
}

/// Tail means at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct UiRow {
    pub h: f64,
    /// `E[|X^h(1)| 1{|X^h(1)| > A}]` for each cutoff `A`.
    pub tail_means: Vec<f64>,
    pub second_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UiReport {
    pub cutoffs: Vec<f64>,
    pub rows: Vec<UiRow>,
    /// `sup_h E[|X^h(1)|^2]`, the p = 2 moment bound.
    pub sup_second_moment: f64,
    /// Scheme reports bounded second moments (Lipschitz model).
    pub moment_route: bool,
    /// Largest tail mean over `h` at the largest cutoff.
    pub worst_tail: f64,
    pub threshold: f64,
    /// Bounded payoff: the diagnostic is not needed.
    pub skipped: bool,
    pub pass: bool,
}

impl UiReport {
    pub fn largest_cutoff(&self) -> f64 {
        self.cutoffs.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Tail mean allowed at the largest cutoff, relative to the state scale.
pub const UI_TAIL_FRACTION: f64 = 0.01;

/// Cutoffs `s 2^k` up to `1 / (2 h_min)`, at least four of them.
fn ui_cutoffs(scale: f64, h_min: f64) -> Vec<f64> {
    let limit = 0.5 / h_min;
    let mut cutoffs = Vec::new();
    for k in 1..=40 {
        let a = scale * 2f64.powi(k);
        if k > 4 && a > limit {
            break;
        }
        cutoffs.push(a);
    }
    cutoffs
}

/// Uniform-integrability diagnostic on the terminal value of the observed
/// coordinate.
pub fn ui_diagnostic(
    model: &SdeModel,
    config: &SchemeConfig,
    spec: &FunctionalSpec,
    h_grid: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<UiReport> {
    ui_diagnostic_with(model, &|h| config.with_h(h), spec, h_grid, n_paths, seed, workers)
}

/// [`ui_diagnostic`] with the scheme for each `h` built by `make_config`,
/// e.g. to recompute a cap of `1/h`.
pub fn ui_diagnostic_with(
    model: &SdeModel,
    make_config: &dyn Fn(f64) -> SchemeConfig,
    spec: &FunctionalSpec,
    h_grid: &[f64],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<UiReport> {
    if h_grid.is_empty() {
        return Err(Error::Domain("UI diagnostic needs at least one step size".into()));
    }
    if n_paths == 0 {
        return Err(Error::Domain("UI diagnostic needs at least one path".into()));
    }
    let coord = spec.coordinate;
    let x0 = *model
        .x0()
        .get(coord)
        .ok_or_else(|| Error::Dimension(format!("coordinate {coord} out of range")))?;
    let scale = x0.abs().max(1.0);
    let h_min = h_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let cutoffs = ui_cutoffs(scale, h_min);
    let threshold = UI_TAIL_FRACTION * scale;

    if let Growth::Bounded(_) = spec.payoff.growth() {
        return Ok(UiReport {
            cutoffs,
            rows: Vec::new(),
            sup_second_moment: f64::NAN,
            moment_route: false,
            worst_tail: 0.0,
            threshold,
            skipped: true,
            pass: true,
        });
    }

    let mut rows = Vec::with_capacity(h_grid.len());
    let mut moment_route = true;
    for &h in h_grid {
        let sim = SchemeSimulator::new(model.clone(), make_config(h))?;
        moment_route &= sim.bounded_moments();
        let terminal = collect_paths(n_paths, workers, |i| {
            let path = sim.simulate(RngStream::new(seed, i))?;
            Ok(path.state(path.len() - 1)[coord].abs())
        })?;
        let n = terminal.len() as f64;
        let tail_means = cutoffs
            .iter()
            .map(|&a| terminal.iter().filter(|&&x| x > a).sum::<f64>() / n)
            .collect();
        let second_moment = terminal.iter().map(|x| x * x).sum::<f64>() / n;
        rows.push(UiRow { h, tail_means, second_moment });
    }
    let worst_tail = rows
        .iter()
        .map(|r| *r.tail_means.last().unwrap_or(&0.0))
        .fold(0.0, f64::max);
    let sup_second_moment = rows.iter().map(|r| r.second_moment).fold(0.0, f64::max);
    Ok(UiReport {
        cutoffs,
        rows,
        sup_second_moment,
        moment_route,
        worst_tail,
        threshold,
        skipped: false,
        pass: worst_tail <= threshold,
    })
}

/// Reference value for a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub value: f64,
    /// Where the value comes from.
    pub note: String,
}

impl Oracle {
    pub fn new(value: f64, note: impl Into<String>) -> Self {
        Self { value, note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub estimate: Estimate,
    /// `|mean - oracle|` when an oracle is present.
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Sorted by decreasing `h`.
    pub rows: Vec<ConvergenceRow>,
    pub oracle: Option<Oracle>,
    /// Bias allowance constant: the final interval is widened by `C sqrt(h)`.
    pub bias_c: f64,
    /// Least-squares slope of `log error` against `log h`.
    pub trend: Option<f64>,
    /// Errors nonincreasing in `h` up to one inversion.
    pub monotone: Option<bool>,
    /// Smallest-`h` 99% interval, widened by the bias allowance, covers the
    /// oracle.
    pub converged: Option<bool>,
}

impl ConvergenceReport {
    /// Set when an oracle is present and the smallest-`h` row misses it.
    pub fn non_convergence(&self) -> bool {
        self.converged == Some(false)
    }
}

/// Default bias allowance constant `C` in `C sqrt(h)`.
pub const DEFAULT_BIAS_C: f64 = 0.11;

/// Settings for [`convergence_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub run: RunOptions,
    pub bias_c: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { run: RunOptions::default(), bias_c: DEFAULT_BIAS_C }
    }
}

fn check_grid(h_grid: &[f64]) -> Result<()> {
    if h_grid.len() < 3 {
        return Err(Error::Domain(format!("convergence study needs at least 3 step sizes, got {}", h_grid.len())));
    }
    if h_grid.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(Error::Domain("step sizes must lie in (0, 1]".into()));
    }
    if h_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("step sizes must be strictly decreasing".into()));
    }
    Ok(())
}

/// Runs [`estimate_with`] for every `h` in `h_grid`, reusing `base` with its
/// step parameter replaced.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    model: &SdeModel,
    base: &SchemeConfig,
    spec: &FunctionalSpec,
    h_grid: &[f64],
    n_paths: usize,
    seed: u64,
    oracle: Option<Oracle>,
    options: &StudyOptions,
) -> Result<ConvergenceReport> {
    convergence_study_with(model, &|h| base.with_h(h), spec, h_grid, n_paths, seed, oracle, options)
}

/// [`convergence_study`] with the scheme for each `h` built by
/// `make_config`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study_with(
    model: &SdeModel,
    make_config: &dyn Fn(f64) -> SchemeConfig,
    spec: &FunctionalSpec,
    h_grid: &[f64],
    n_paths: usize,
    seed: u64,
    oracle: Option<Oracle>,
    options: &StudyOptions,
) -> Result<ConvergenceReport> {
    check_grid(h_grid)?;
    let rows = h_grid
        .iter()
        .map(|&h| estimate_with(model, &make_config(h), spec, n_paths, seed, &options.run))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(rows, oracle, options.bias_c))
}

/// Convergence study for any family of path sources indexed by `h`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study_sources<S, F>(
    make_source: F,
    spec: &FunctionalSpec,
    h_grid: &[f64],
    n_paths: usize,
    seed: u64,
    oracle: Option<Oracle>,
    options: &StudyOptions,
) -> Result<ConvergenceReport>
where
    S: PathSource,
    F: Fn(f64) -> Result<S>,
{
    check_grid(h_grid)?;
    let rows = h_grid
        .iter()
        .map(|&h| estimate_source(&make_source(h)?, spec, n_paths, seed, options.run.workers))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(rows, oracle, options.bias_c))
}

fn summarize(estimates: Vec<Estimate>, oracle: Option<Oracle>, bias_c: f64) -> ConvergenceReport {
    let rows: Vec<ConvergenceRow> = estimates
        .into_iter()
        .map(|e| ConvergenceRow {
            h: e.h,
            error: oracle.as_ref().map(|o| (e.mean - o.value).abs()),
            estimate: e,
        })
        .collect();
    let (mut trend, mut monotone, mut converged) = (None, None, None);
    if let Some(o) = &oracle {
        let errors: Vec<f64> = rows.iter().filter_map(|r| r.error).collect();
        let inversions = errors.windows(2).filter(|w| w[1] > w[0]).count();
        monotone = Some(inversions <= 1);
        if errors.iter().all(|e| *e > 0.0) {
            trend = Some(log_slope(&rows.iter().map(|r| r.h).collect::<Vec<_>>(), &errors));
        }
        let last = rows.last().expect("grid has at least 3 rows");
        let half_width = Z99 * last.estimate.stderr + bias_c * last.h.sqrt();
        converged = Some((last.estimate.mean - o.value).abs() <= half_width);
    }
    ConvergenceReport { rows, oracle, bias_c, trend, monotone, converged }
}

fn log_slope(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{payoff_up_and_in_call, ConstantPayoff, TerminalKind, TerminalPayoff};
    use crate::path::BarrierPair;
    use crate::schemes::SchemeKind;
    use std::sync::Arc;

    fn terminal_spec() -> FunctionalSpec {
        let g = TerminalPayoff { kind: TerminalKind::Value, strike: 0.0, r: 0.0 };
        FunctionalSpec::uniform(1, Arc::new(g), BarrierPair::unbounded()).unwrap()
    }

    #[test]
    fn welford_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = RunningStats::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = RunningStats::default();
        let mut b = RunningStats::default();
        xs[..300].iter().for_each(|&x| a.push(x));
        xs[300..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert_eq!(m.n, all.n);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn constant_payoff_is_exact() {
        let model = SdeModel::gbm(0.1, 0.3, 0.8).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 0.05);
        let spec = FunctionalSpec::uniform(2, Arc::new(ConstantPayoff(1.5)), BarrierPair::unbounded()).unwrap();
        let e = estimate(&model, &cfg, &spec, 100, 1).unwrap();
        assert_eq!(e.mean, 1.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.ci95, (1.5, 1.5));
        assert_eq!(e.n_paths, 100);
    }

    #[test]
    fn too_few_paths() {
        let model = SdeModel::gbm(0.1, 0.3, 0.8).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 0.05);
        let spec = FunctionalSpec::uniform(1, Arc::new(ConstantPayoff(1.0)), BarrierPair::unbounded()).unwrap();
        assert!(estimate(&model, &cfg, &spec, 1, 1).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let model = SdeModel::gbm(0.0, 0.4, 1.0).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 1.0 / 64.0);
        let spec = terminal_spec();
        let opts = |w| RunOptions::default().with_workers(w).with_override_ui(true);
        let a = estimate_with(&model, &cfg, &spec, 500, 9, &opts(1)).unwrap();
        let b = estimate_with(&model, &cfg, &spec, 500, 9, &opts(3)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn martingale_terminal_mean() {
        let model = SdeModel::gbm(0.0, 0.3, 0.8).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 1.0 / 64.0);
        let e = estimate(&model, &cfg, &terminal_spec(), 20_000, 4).unwrap();
        assert!((e.mean - 0.8).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn failing_stream_is_reported() {
        let err = reduce_paths(300, 1, |i| if i >= 130 { Err(Error::Domain("boom".into())) } else { Ok(1.0) })
            .unwrap_err();
        assert!(matches!(err, Error::Stream { stream: 130, .. }), "{err:?}");
    }

    #[test]
    fn ui_gbm_passes_and_bounded_skips() {
        let model = SdeModel::gbm(0.1, 0.3, 0.8).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 0.01);
        let spec = FunctionalSpec::uniform(1, payoff_up_and_in_call(0.5, 1.0, 0.1).unwrap(), BarrierPair::unbounded()).unwrap();
        let rep = ui_diagnostic(&model, &cfg, &spec, &[0.04, 0.02, 0.01], 500, 1, 1).unwrap();
        assert!(rep.pass && rep.moment_route && !rep.skipped);
        // E[X(1)^2] = 0.64 e^{0.2 + 0.09}
        assert!((rep.sup_second_moment - 0.64 * 0.29f64.exp()).abs() < 0.1);

        let bounded = FunctionalSpec::uniform(1, Arc::new(ConstantPayoff(1.0)), BarrierPair::unbounded()).unwrap();
        let rep = ui_diagnostic(&model, &cfg, &bounded, &[0.01], 10, 1, 1).unwrap();
        assert!(rep.skipped && rep.pass);
    }

    #[test]
    fn convergence_grid_validation() {
        let model = SdeModel::constant_coefficients(0.0, 0.0, 1.0).unwrap();
        let cfg = SchemeConfig::new(SchemeKind::Euler, 0.1);
        let spec = FunctionalSpec::uniform(1, Arc::new(ConstantPayoff(2.0)), BarrierPair::unbounded()).unwrap();
        let opts = StudyOptions::default();
        assert!(convergence_study(&model, &cfg, &spec, &[0.1, 0.05], 10, 1, None, &opts).is_err());
        assert!(convergence_study(&model, &cfg, &spec, &[0.1, 0.2, 0.05], 10, 1, None, &opts).is_err());

        let rep = convergence_study(&model, &cfg, &spec, &[0.1, 0.05, 0.025], 10, 1, Some(Oracle::new(2.0, "exact")), &opts).unwrap();
        assert!(rep.rows.iter().all(|r| r.estimate.mean == 2.0 && r.error == Some(0.0)));
        assert_eq!(rep.converged, Some(true));
        assert_eq!(rep.trend, None);
    }

    #[test]
    fn log_slope_of_power_law() {
        let h = [0.1, 0.01, 0.001];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.sqrt()).collect();
        assert!((log_slope(&h, &e) - 0.5).abs() < 1e-12);
    }
}
