//! Command implementations. Each returns the rendered report and whether
//! every diagnostic passed.

use std::fmt::Write as _;
use std::sync::Arc;

use pathfunc_core::analytic::up_and_in_call_closed_form;
use pathfunc_core::counterexamples::{
    counterexample_bessel, counterexample_strong, counterexample_tangency, TangencyPseudoScheme,
};
use pathfunc_core::estimator::{convergence_study_sources, convergence_study_with, ui_diagnostic_with, StudyOptions};
use pathfunc_core::functionals::{
    ConstantPayoff, ExitTimePayoff, Payoff, TerminalKind, TerminalPayoff,
};
use pathfunc_core::skorohod::{skorohod_distance_with_lambda, sup_distance};
use pathfunc_core::{
    check_local_consistency, estimate_with, payoff_discrete_barrier_call,
    payoff_up_and_in_call, BarrierPair, ConvergenceReport, Error, FunctionalSpec, Oracle, RunOptions,
    SchemeConfig, SchemeKind, SdeModel, StepPath, StochVolModel, TimeFn, VolFn,
};

use crate::config::{
    CapSpec, ConfigError, ModelKind, OracleSpec, OutputFormat, PayoffKind, RunConfig, SchemeChoice,
    TerminalShape, VolShape,
};
use crate::output::{render, Row};

/// Failure of a command, mapped to an exit code by the caller.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// A diagnostic failed before anything could be reported.
    #[error("{0}")]
    Diagnostic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 64,
            CliError::Diagnostic(_) | CliError::Runtime(Error::UiRefused(_)) => 2,
            CliError::Runtime(Error::Stream { source, .. }) if matches!(**source, Error::UiRefused(_)) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Rendered output of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    /// All diagnostics passed.
    pub pass: bool,
}

pub fn build_model(cfg: &RunConfig) -> CliResult<SdeModel> {
    let m = &cfg.model;
    let model = match m.kind {
        ModelKind::Gbm => SdeModel::gbm(m.r, m.sigma, m.x0),
        ModelKind::Bessel3 => SdeModel::bessel3(m.x0),
        ModelKind::Constant => SdeModel::constant_coefficients(m.drift, m.diffusion, m.x0),
        ModelKind::StochVol => SdeModel::stoch_vol(StochVolModel {
            r: m.r,
            sigma_of_y: match m.vol_fn {
                VolShape::Constant => VolFn::Constant(m.sigma),
                VolShape::Linear => VolFn::Linear(m.sigma),
                VolShape::Power => VolFn::Power { c: m.sigma, p: m.vol_p },
            },
            mu: TimeFn::Constant(m.mu),
            b_vol: TimeFn::Constant(m.b_vol),
            rho: m.rho,
            x0: m.x0,
            y0: m.y0,
        }),
    };
    // parameter problems are configuration problems
    model.map_err(|e| ConfigError::new("model", e.to_string()).into())
}

fn chain_kind(cfg: &RunConfig) -> CliResult<SchemeKind> {
    match cfg.scheme.kind {
        SchemeChoice::Chain(k) => Ok(k),
        SchemeChoice::Tangency => {
            Err(ConfigError::new("scheme.kind", "the tangency pseudo-scheme only drives `converge`").into())
        }
    }
}

/// Scheme configuration at step parameter `h`.
pub fn scheme_at(cfg: &RunConfig, kind: SchemeKind, h: f64) -> SchemeConfig {
    let s = &cfg.scheme;
    let mut c = SchemeConfig::new(kind, h);
    if let Some(eps) = s.epsilon {
        c = c.with_epsilon(eps);
    }
    if let Some(k) = s.qu_k {
        c.qu_bounds = (k, k);
    }
    match s.cap {
        Some(CapSpec::Level(v)) => c = c.with_cap(v),
        Some(CapSpec::InverseH) => c = c.with_cap(1.0 / h),
        None => {}
    }
    c
}

fn discount(cfg: &RunConfig) -> f64 {
    cfg.payoff.rate.unwrap_or(cfg.model.r)
}

pub fn build_spec(cfg: &RunConfig) -> CliResult<FunctionalSpec> {
    let p = &cfg.payoff;
    let r = discount(cfg);
    let to_cfg = |e: Error| CliError::from(ConfigError::new("payoff", e.to_string()));
    let payoff: Arc<dyn Payoff> = match p.kind {
        PayoffKind::UpInCall => payoff_up_and_in_call(p.strike, p.barrier_level, r).map_err(to_cfg)?,
        PayoffKind::DiscreteBarrierCall => {
            payoff_discrete_barrier_call(p.strike, p.barrier_level, r, p.m).map_err(to_cfg)?
        }
        PayoffKind::CustomTerminal => Arc::new(TerminalPayoff {
            kind: match p.terminal_kind {
                TerminalShape::Call => TerminalKind::Call,
                TerminalShape::Put => TerminalKind::Put,
                TerminalShape::Value => TerminalKind::Value,
            },
            strike: p.strike,
            r,
        }),
        PayoffKind::Constant => Arc::new(ConstantPayoff(p.constant)),
        PayoffKind::ExitTime => Arc::new(ExitTimePayoff),
    };
    let barriers = BarrierPair::constant(cfg.functional.lower, cfg.functional.upper)
        .map_err(|e| ConfigError::new("functional.lower", e.to_string()))?;
    Ok(FunctionalSpec::uniform(p.m, payoff, barriers)
        .map_err(to_cfg)?
        .with_coordinate(cfg.functional.coordinate))
}

fn run_options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        workers: cfg.run.workers,
        override_ui: cfg.functional.override_ui,
        ui_paths: cfg.run.ui_paths,
    }
}

pub fn cmd_price(cfg: &RunConfig) -> CliResult<Report> {
    let model = build_model(cfg)?;
    let kind = chain_kind(cfg)?;
    let spec = build_spec(cfg)?;
    let scheme = scheme_at(cfg, kind, cfg.scheme.h);
    scheme.validate(&model).map_err(|e| ConfigError::new("scheme", e.to_string()))?;
    let e = estimate_with(&model, &scheme, &spec, cfg.run.n_paths, cfg.run.seed, &run_options(cfg))?;
    let text = render(&[Row { estimate: &e, extra: vec![] }], cfg.output.format, cfg.output.timing);
    Ok(Report { text, pass: true })
}

fn oracle(cfg: &RunConfig) -> CliResult<Option<Oracle>> {
    Ok(match cfg.run.oracle {
        None => None,
        Some(OracleSpec::Value(v)) => Some(Oracle::new(v, "configured value")),
        Some(OracleSpec::UpInClosedForm) => {
            let m = &cfg.model;
            let lognormal = match m.kind {
                ModelKind::Gbm => true,
                ModelKind::StochVol => m.vol_fn == VolShape::Constant && m.mu == 0.0 && m.b_vol == 0.0,
                _ => false,
            };
            if !lognormal {
                return Err(ConfigError::new("run.oracle", "closed form needs a lognormal price model").into());
            }
            if cfg.payoff.kind != PayoffKind::UpInCall {
                return Err(ConfigError::new("run.oracle", "closed form prices the up_in_call payoff").into());
            }
            if discount(cfg) != m.r {
                return Err(ConfigError::new("run.oracle", "closed form needs payoff.rate equal to model.r").into());
            }
            let p = &cfg.payoff;
            if p.strike > p.barrier_level {
                return Err(ConfigError::new("run.oracle", "closed form needs strike <= barrier").into());
            }
            let v = up_and_in_call_closed_form(m.x0, p.strike, p.barrier_level, m.r, m.sigma);
            Some(Oracle::new(v, "closed-form continuous up-and-in call"))
        }
    })
}

fn render_convergence(rep: &ConvergenceReport, cfg: &RunConfig) -> String {
    let rows: Vec<Row<'_>> = rep
        .rows
        .iter()
        .map(|r| Row {
            estimate: &r.estimate,
            extra: if rep.oracle.is_some() { vec![("error", r.error)] } else { vec![] },
        })
        .collect();
    let mut s = render(&rows, cfg.output.format, cfg.output.timing);
    if cfg.output.format == OutputFormat::Table {
        if let Some(o) = &rep.oracle {
            let _ = writeln!(s, "oracle: {:.6} ({})", o.value, o.note);
            let _ = writeln!(s, "bias allowance C: {}", rep.bias_c);
            match rep.trend {
                Some(t) => {
                    let _ = writeln!(s, "error trend (log-log slope): {t:.3}");
                }
                None => {
                    let _ = writeln!(s, "error trend (log-log slope): -");
                }
            }
            let _ = writeln!(s, "errors nonincreasing (one inversion allowed): {}", rep.monotone == Some(true));
            if rep.non_convergence() {
                let _ = writeln!(s, "NON-CONVERGENCE: smallest-h interval misses the oracle");
            } else {
                let _ = writeln!(s, "converged: smallest-h interval covers the oracle");
            }
        }
    }
    s
}

pub fn cmd_converge(cfg: &RunConfig) -> CliResult<(Report, ConvergenceReport)> {
    let grid = &cfg.run.h_grid;
    if grid.len() < 3 {
        return Err(ConfigError::new("run.h_grid", format!("needs at least 3 step sizes, got {}", grid.len())).into());
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) || grid.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
        return Err(ConfigError::new("run.h_grid", "step sizes must be strictly decreasing in (0, 1]").into());
    }
    let spec = build_spec(cfg)?;
    let oracle = oracle(cfg)?;
    let options = StudyOptions { run: run_options(cfg), bias_c: cfg.run.bias_c };
    let rep = match cfg.scheme.kind {
        SchemeChoice::Tangency => convergence_study_sources(
            |h| Ok(TangencyPseudoScheme::new(h)),
            &spec,
            grid,
            cfg.run.n_paths,
            cfg.run.seed,
            oracle,
            &options,
        )?,
        SchemeChoice::Chain(kind) => {
            let model = build_model(cfg)?;
            convergence_study_with(
                &model,
                &|h| scheme_at(cfg, kind, h),
                &spec,
                grid,
                cfg.run.n_paths,
                cfg.run.seed,
                oracle,
                &options,
            )?
        }
    };
    let text = render_convergence(&rep, cfg);
    Ok((Report { text, pass: true }, rep))
}

pub fn cmd_check(cfg: &RunConfig) -> CliResult<Report> {
    let model = build_model(cfg)?;
    let kind = chain_kind(cfg)?;
    let spec = build_spec(cfg)?;
    let h = cfg.scheme.h;
    let scheme = scheme_at(cfg, kind, h);
    let d = model.dim_state();
    let mut probes = Vec::new();
    for &y in &cfg.check.probe_y {
        for &t in &cfg.check.probe_t {
            let mut state = model.x0().to_vec();
            state[cfg.functional.coordinate.min(d - 1)] = y;
            probes.push((state, t));
        }
    }
    let lc = check_local_consistency(&model, &scheme, &probes, cfg.check.n_draws, cfg.run.seed, cfg.check.c)?;

    let h_grid = if cfg.run.h_grid.is_empty() { vec![4.0 * h, 2.0 * h, h] } else { cfg.run.h_grid.clone() };
    let ui = ui_diagnostic_with(
        &model,
        &|hh| scheme_at(cfg, kind, hh),
        &spec,
        &h_grid,
        cfg.run.ui_paths,
        cfg.run.seed,
        cfg.run.workers,
    )?;

    let mut s = String::new();
    let _ = writeln!(s, "local consistency: scheme {} h={} C={} draws={}", kind.name(), h, lc.c, lc.n_draws);
    let _ = writeln!(
        s,
        "{:>10} {:>6} {:>6} {:>12} {:>10} {:>12} {:>10} {:>10} {:>10} {:>5}",
        "y", "t", "exact", "r1", "r1_se", "r2", "r2_se", "dt_min", "dt_max", "pass"
    );
    for p in &lc.probes {
        let _ = writeln!(
            s,
            "{:>10.4} {:>6.3} {:>6} {:>12.3e} {:>10.2e} {:>12.3e} {:>10.2e} {:>10.3e} {:>10.3e} {:>5}",
            p.y[cfg.functional.coordinate.min(d - 1)],
            p.t,
            p.exact,
            max_abs(&p.r1),
            p.r1_se.iter().copied().fold(0.0, f64::max),
            max_abs(&p.r2),
            p.r2_se.iter().copied().fold(0.0, f64::max),
            p.dt_min,
            p.dt_max,
            if p.pass() { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(s, "local consistency: {}", if lc.pass { "PASS" } else { "FAIL" });
    if ui.skipped {
        let _ = writeln!(s, "uniform integrability: bounded payoff, diagnostic skipped: PASS");
    } else {
        let _ = writeln!(
            s,
            "uniform integrability: cutoffs {} .. {}, threshold {:.3e}",
            ui.cutoffs.first().copied().unwrap_or(0.0),
            ui.largest_cutoff(),
            ui.threshold
        );
        let _ = writeln!(s, "{:>12} {:>14} {:>14}", "h", "tail@max_A", "E|X(1)|^2");
        for r in &ui.rows {
            let _ = writeln!(s, "{:>12.4e} {:>14.4e} {:>14.6}", r.h, r.tail_means.last().copied().unwrap_or(0.0), r.second_moment);
        }
        let _ = writeln!(
            s,
            "sup second moment: {:.6}{}",
            ui.sup_second_moment,
            if ui.moment_route { " (bounded-moment model)" } else { "" }
        );
        let _ = writeln!(s, "uniform integrability: {}", if ui.pass { "PASS" } else { "FAIL" });
    }
    Ok(Report { text: s, pass: lc.pass && ui.pass })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| if x.abs() > a.abs() { *x } else { a })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counterexample {
    Tangency,
    Bessel,
    Strong,
}

/// Settings for the counter-example harnesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessOptions {
    pub seed: u64,
    pub workers: usize,
    /// Paths per row; `None` picks the harness default.
    pub paths: Option<usize>,
}

pub const BESSEL_H_GRID: [f64; 3] = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0];
pub const BESSEL_PATHS: usize = 20_000;
pub const STRONG_NS: [usize; 3] = [100, 1_000, 10_000];
pub const STRONG_PATHS: usize = 200;

pub fn cmd_counterexample(which: Counterexample, opts: HarnessOptions) -> CliResult<Report> {
    let mut s = String::new();
    let pass = match which {
        Counterexample::Tangency => {
            let rep = counterexample_tangency()?;
            let _ = writeln!(s, "limit path X(s) = 1 - (s - 1/2)^2, barrier beta = 1");
            let _ = writeln!(s, "tau = {}", rep.tau);
            for (h, t) in &rep.rows {
                let _ = writeln!(s, "h = {h:<6} tau^h = {t}");
            }
            let _ = writeln!(s, "class = {:?}", rep.class);
            let ok = rep.tau == 0.5 && rep.rows.iter().all(|r| r.1 == 1.0);
            let _ = writeln!(s, "tau^h does not converge to tau: {ok}");
            ok
        }
        Counterexample::Bessel => {
            let n = opts.paths.unwrap_or(BESSEL_PATHS);
            let rep = counterexample_bessel(&BESSEL_H_GRID, n, opts.seed, opts.workers)?;
            let _ = writeln!(s, "Bessel(3) from x0 = {}, Euler, cap 1/h, {n} paths", rep.x0);
            let _ = writeln!(s, "{:>10} {:>10} {:>12} {:>11}", "h", "cap", "mean", "stderr");
            for r in rep.rows.iter().chain(std::iter::once(&rep.uncapped)) {
                let cap = r.cap.map_or("inf".to_string(), |c| format!("{c}"));
                let _ = writeln!(s, "{:>10.5} {:>10} {:>12.6} {:>11.3e}", r.h, cap, r.estimate.mean, r.estimate.stderr);
            }
            let _ = writeln!(s, "quadrature E[X(1)]   = {:.6}", rep.oracle);
            let _ = writeln!(s, "quadrature E[1/X(1)] = {:.6}", rep.reciprocal_oracle);
            let last = rep.rows.last().expect("non-empty grid");
            let near_one = (last.estimate.mean - 1.0).abs() <= 3.0 * last.estimate.stderr;
            let below = 1.0 - rep.oracle > 5.0 * last.estimate.stderr;
            let _ = writeln!(s, "capped mean within 3 stderr of 1 at smallest h: {near_one}");
            let _ = writeln!(s, "oracle below 1 by more than 5 stderr: {below}");
            near_one && below
        }
        Counterexample::Strong => {
            let n = opts.paths.unwrap_or(STRONG_PATHS);
            let rep = counterexample_strong(&STRONG_NS, n, opts.seed, opts.workers)?;
            let _ = writeln!(s, "sqrt(N) E[sup |W(t) - W(floor(N t)/N)|], {} substeps, {n} paths", rep.substeps);
            let _ = writeln!(s, "{:>8} {:>12} {:>11} {:>14}", "N", "scaled", "stderr", "sqrt(2 log N)");
            for r in &rep.rows {
                let _ = writeln!(s, "{:>8} {:>12.5} {:>11.3e} {:>14.5}", r.n, r.scaled_error, r.stderr, r.trend);
            }
            let _ = writeln!(s, "strictly increasing: {}", rep.increasing);
            rep.increasing
        }
    };
    Ok(Report { text: s, pass })
}

/// Reads a `t,value` CSV; a non-numeric first line is taken as a header.
pub fn read_path_csv(text: &str, name: &str) -> CliResult<StepPath> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((t, v)) => {
                times.push(t);
                values.push(v);
            }
            None if times.is_empty() && no == 0 => continue,
            None => {
                return Err(ConfigError::new(format!("{name}:{}", no + 1), format!("expected `t,value`, got `{line}`")).into())
            }
        }
    }
    StepPath::scalar(times, values).map_err(|e| ConfigError::new(name, e.to_string()).into())
}

pub fn cmd_skorohod_dist(x: &StepPath, y: &StepPath, budget: usize) -> CliResult<Report> {
    let m = skorohod_distance_with_lambda(x, y, budget)?;
    let sup = sup_distance(x, y)?;
    let mut s = String::new();
    let _ = writeln!(s, "skorohod_distance_approx = {}", m.distance);
    let _ = writeln!(s, "sup_distance = {sup}");
    let _ = writeln!(s, "time_change_knots = {}", m.lambda.knots().len() - 2);
    Ok(Report { text: s, pass: true })
}
