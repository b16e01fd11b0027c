//! Command-line front end: `price`, `converge`, `check`, `counterexample`
//! and `skorohod-dist`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 failed diagnostic, 64
//! configuration or usage error.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{
    cmd_check, cmd_converge, cmd_counterexample, cmd_price, cmd_skorohod_dist, read_path_csv, CliResult,
    Counterexample, HarnessOptions, Report,
};
use crate::config::{ConfigError, OutputFormat, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_DIAGNOSTIC: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;

/// Environment variable overriding `run.workers`.
pub const WORKERS_ENV: &str = "PATHFUNC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "pathfunc", version, about = "Monte Carlo evaluation of path functionals")]
struct Cli {
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.workers` and the PATHFUNC_WORKERS variable.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Report elapsed time as 0 for byte-reproducible output.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate V^h for one step size.
    Price { config: PathBuf },
    /// Estimate V^h over `run.h_grid` and compare with an oracle.
    Converge { config: PathBuf },
    /// Local-consistency and uniform-integrability diagnostics.
    Check { config: PathBuf },
    /// Run one of the counter-example harnesses.
    Counterexample {
        #[arg(value_enum)]
        name: HarnessArg,
        /// Paths per row.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Approximate Skorohod distance between two `t,value` CSV paths.
    SkorohodDist {
        x: PathBuf,
        y: PathBuf,
        /// Maximum interior knots per candidate time change.
        #[arg(long, default_value_t = pathfunc_core::skorohod::DEFAULT_BUDGET)]
        budget: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HarnessArg {
    Tangency,
    Bessel,
    Strong,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read: {e}")).into())
}

struct Overrides {
    seed: Option<u64>,
    workers: Option<usize>,
    format: Option<OutputFormat>,
    no_timing: bool,
}

fn env_workers() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| ConfigError::new(WORKERS_ENV, format!("not a worker count: `{v}`")).into()),
        Err(_) => Ok(None),
    }
}

fn load_config(path: &Path, o: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::parse(&read(path)?)?;
    if let Some(w) = env_workers()? {
        cfg.run.workers = w;
    }
    if let Some(w) = o.workers {
        cfg.run.workers = w;
    }
    if let Some(s) = o.seed {
        cfg.run.seed = s;
    }
    if let Some(f) = o.format {
        cfg.output.format = f;
    }
    if o.no_timing {
        cfg.output.timing = false;
    }
    Ok(cfg)
}

fn emit(report: &Report, target: Option<&str>, out: &mut dyn Write) -> CliResult<()> {
    match target {
        Some(path) => std::fs::write(path, &report.text)?,
        None => out.write_all(report.text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<bool> {
    let o = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        format: cli.format.map(|f| match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Csv => OutputFormat::Csv,
        }),
        no_timing: cli.no_timing,
    };
    match cli.command {
        Command::Price { config } => {
            let cfg = load_config(&config, &o)?;
            let rep = cmd_price(&cfg)?;
            emit(&rep, cfg.output.path.as_deref(), out)?;
            Ok(rep.pass)
        }
        Command::Converge { config } => {
            let cfg = load_config(&config, &o)?;
            let (rep, _) = cmd_converge(&cfg)?;
            emit(&rep, cfg.output.path.as_deref(), out)?;
            Ok(rep.pass)
        }
        Command::Check { config } => {
            let cfg = load_config(&config, &o)?;
            let rep = cmd_check(&cfg)?;
            emit(&rep, cfg.output.path.as_deref(), out)?;
            Ok(rep.pass)
        }
        Command::Counterexample { name, paths } => {
            let workers = o.workers.or(env_workers()?).unwrap_or(0);
            let which = match name {
                HarnessArg::Tangency => Counterexample::Tangency,
                HarnessArg::Bessel => Counterexample::Bessel,
                HarnessArg::Strong => Counterexample::Strong,
            };
            let rep = cmd_counterexample(which, HarnessOptions { seed: o.seed.unwrap_or(1), workers, paths })?;
            emit(&rep, None, out)?;
            // the harnesses report their findings; they are not diagnostics
            Ok(true)
        }
        Command::SkorohodDist { x, y, budget } => {
            let px = read_path_csv(&read(&x)?, &x.display().to_string())?;
            let py = read_path_csv(&read(&y)?, &y.display().to_string())?;
            let rep = cmd_skorohod_dist(&px, &py, budget)?;
            emit(&rep, None, out)?;
            Ok(true)
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(err, "diagnostic failed");
            EXIT_DIAGNOSTIC
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
