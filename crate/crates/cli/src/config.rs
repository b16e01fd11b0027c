//! Flat run configuration: one `section.key = value` per line, `#` starts a
//! comment. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use pathfunc_core::SchemeKind;

/// Configuration error naming the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gbm,
    Bessel3,
    StochVol,
    Constant,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gbm => "gbm",
            ModelKind::Bessel3 => "bessel3",
            ModelKind::StochVol => "stoch_vol",
            ModelKind::Constant => "constant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolShape {
    Constant,
    Linear,
    Power,
}

impl VolShape {
    pub fn name(&self) -> &'static str {
        match self {
            VolShape::Constant => "constant",
            VolShape::Linear => "linear",
            VolShape::Power => "power",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlock {
    pub kind: ModelKind,
    pub r: f64,
    /// Volatility level; the scale `c` of `sigma(y)` for `stoch_vol`.
    pub sigma: f64,
    pub x0: f64,
    pub y0: f64,
    pub rho: f64,
    pub mu: f64,
    pub b_vol: f64,
    pub vol_fn: VolShape,
    pub vol_p: f64,
    /// Drift and diffusion of the `constant` model.
    pub drift: f64,
    pub diffusion: f64,
}

/// Scheme selection; `tangency` is the deterministic pseudo-scheme of the
/// tangency counter-example and only drives `converge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Chain(SchemeKind),
    Tangency,
}

impl SchemeChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeChoice::Chain(k) => k.name(),
            SchemeChoice::Tangency => "tangency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapSpec {
    Level(f64),
    /// `1 / h`, recomputed for every step size.
    InverseH,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeBlock {
    pub kind: SchemeChoice,
    pub h: f64,
    pub cap: Option<CapSpec>,
    pub epsilon: Option<f64>,
    /// Overrides both quasi-uniformity constants.
    pub qu_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    UpInCall,
    DiscreteBarrierCall,
    CustomTerminal,
    Constant,
    ExitTime,
}

impl PayoffKind {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffKind::UpInCall => "up_in_call",
            PayoffKind::DiscreteBarrierCall => "discrete_barrier_call",
            PayoffKind::CustomTerminal => "custom_terminal",
            PayoffKind::Constant => "constant",
            PayoffKind::ExitTime => "exit_time",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalShape {
    Call,
    Put,
    Value,
}

impl TerminalShape {
    pub fn name(&self) -> &'static str {
        match self {
            TerminalShape::Call => "call",
            TerminalShape::Put => "put",
            TerminalShape::Value => "value",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffBlock {
    pub kind: PayoffKind,
    pub strike: f64,
    pub barrier_level: f64,
    pub m: usize,
    pub terminal_kind: TerminalShape,
    pub constant: f64,
    /// Discount rate; defaults to `model.r`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalBlock {
    pub coordinate: usize,
    pub override_ui: bool,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleSpec {
    Value(f64),
    /// Closed-form continuous up-and-in call under gbm.
    UpInClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunBlock {
    pub n_paths: usize,
    pub seed: u64,
    /// 0 means one worker per CPU.
    pub workers: usize,
    pub h_grid: Vec<f64>,
    pub oracle: Option<OracleSpec>,
    pub bias_c: f64,
    pub ui_paths: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckBlock {
    pub probe_y: Vec<f64>,
    pub probe_t: Vec<f64>,
    pub n_draws: usize,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub format: OutputFormat,
    pub path: Option<String>,
    /// Report wall-clock time; off gives byte-reproducible output.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub scheme: SchemeBlock,
    pub payoff: PayoffBlock,
    pub functional: FunctionalBlock,
    pub run: RunBlock,
    pub check: CheckBlock,
    pub output: OutputBlock,
}

/// Parses a real number; also accepts `a/b` and `a^b` (e.g. `1/60000`,
/// `2^-10`) and `inf`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        return Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?);
    }
    if let Some((a, b)) = s.split_once('^') {
        return Some(a.trim().parse::<f64>().ok()?.powf(b.trim().parse::<f64>().ok()?));
    }
    s.parse::<f64>().ok()
}

struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| ConfigError::new(key, "missing required key"))
    }

    fn real(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => parse_real(&v).ok_or_else(|| ConfigError::new(key, format!("not a number: `{v}`"))),
        }
    }

    fn opt_real(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| parse_real(&v).ok_or_else(|| ConfigError::new(key, format!("not a number: `{v}`"))))
            .transpose()
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => {
                let x = parse_real(&v).ok_or_else(|| ConfigError::new(key, format!("not a count: `{v}`")))?;
                if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
                    return Err(ConfigError::new(key, format!("not a nonnegative integer: `{v}`")));
                }
                Ok(x as usize)
            }
        }
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key).as_deref() {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(ConfigError::new(key, format!("expected true or false, got `{v}`"))),
        }
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|p| parse_real(p).ok_or_else(|| ConfigError::new(key, format!("not a number: `{}`", p.trim()))))
                .collect(),
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, default: Option<T>, options: &[(&str, T)]) -> Result<T> {
        let raw = match (self.take(key), default) {
            (Some(v), _) => v,
            (None, Some(d)) => return Ok(d),
            (None, None) => return Err(ConfigError::new(key, "missing required key")),
        };
        options
            .iter()
            .find(|(name, _)| *name == raw)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                ConfigError::new(key, format!("unknown value `{raw}`, expected one of {}", names.join(", ")))
            })
    }
}

fn split_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {}", no + 1), format!("expected `section.key = value`, got `{line}`")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if !key.contains('.') {
            return Err(ConfigError::new(key, "keys must look like `section.key`"));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(ConfigError::new(key, "duplicate key"));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut e = Entries { map: split_lines(text)? };

        let model = ModelBlock {
            kind: e.choice(
                "model.kind",
                None,
                &[
                    ("gbm", ModelKind::Gbm),
                    ("bessel3", ModelKind::Bessel3),
                    ("stoch_vol", ModelKind::StochVol),
                    ("constant", ModelKind::Constant),
                ],
            )?,
            r: e.real("model.r", 0.0)?,
            sigma: e.real("model.sigma", 0.0)?,
            x0: e.real("model.x0", 1.0)?,
            y0: e.real("model.y0", 1.0)?,
            rho: e.real("model.rho", 0.0)?,
            mu: e.real("model.mu", 0.0)?,
            b_vol: e.real("model.b_vol", 0.0)?,
            vol_fn: e.choice(
                "model.vol_fn",
                Some(VolShape::Constant),
                &[("constant", VolShape::Constant), ("linear", VolShape::Linear), ("power", VolShape::Power)],
            )?,
            vol_p: e.real("model.vol_p", 1.0)?,
            drift: e.real("model.drift", 0.0)?,
            diffusion: e.real("model.diffusion", 0.0)?,
        };

        let kind_raw = e.required("scheme.kind")?;
        let kind = match kind_raw.as_str() {
            "tangency" => SchemeChoice::Tangency,
            other => SchemeChoice::Chain(SchemeKind::parse(other).ok_or_else(|| {
                ConfigError::new(
                    "scheme.kind",
                    format!("unknown value `{other}`, expected one of euler, binomial_fixed, binomial_variable, log_exact, tangency"),
                )
            })?),
        };
        let h_raw = e.required("scheme.h")?;
        let h = parse_real(&h_raw).ok_or_else(|| ConfigError::new("scheme.h", format!("not a number: `{h_raw}`")))?;
        if !(h > 0.0 && h <= 1.0) {
            return Err(ConfigError::new("scheme.h", format!("must lie in (0, 1], got {h}")));
        }
        let cap = match e.take("scheme.cap") {
            None => None,
            Some(v) if v == "1/h" => Some(CapSpec::InverseH),
            Some(v) => Some(CapSpec::Level(
                parse_real(&v).ok_or_else(|| ConfigError::new("scheme.cap", format!("not a number or `1/h`: `{v}`")))?,
            )),
        };
        let scheme = SchemeBlock { kind, h, cap, epsilon: e.opt_real("scheme.epsilon")?, qu_k: e.opt_real("scheme.qu_k")? };
        if let Some(eps) = scheme.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(ConfigError::new("scheme.epsilon", format!("must lie in (0, 1), got {eps}")));
            }
        }
        if let Some(k) = scheme.qu_k {
            if !(k >= 1.0) {
                return Err(ConfigError::new("scheme.qu_k", format!("must be >= 1, got {k}")));
            }
        }

        let payoff = PayoffBlock {
            kind: e.choice(
                "payoff.kind",
                None,
                &[
                    ("up_in_call", PayoffKind::UpInCall),
                    ("discrete_barrier_call", PayoffKind::DiscreteBarrierCall),
                    ("custom_terminal", PayoffKind::CustomTerminal),
                    ("constant", PayoffKind::Constant),
                    ("exit_time", PayoffKind::ExitTime),
                ],
            )?,
            strike: e.real("payoff.strike", 0.0)?,
            barrier_level: e.real("payoff.barrier_level", 1.0)?,
            m: e.count("payoff.m", 1)?,
            terminal_kind: e.choice(
                "payoff.terminal_kind",
                Some(TerminalShape::Call),
                &[("call", TerminalShape::Call), ("put", TerminalShape::Put), ("value", TerminalShape::Value)],
            )?,
            constant: e.real("payoff.constant", 0.0)?,
            rate: e.opt_real("payoff.rate")?,
        };
        if payoff.m == 0 {
            return Err(ConfigError::new("payoff.m", "must be at least 1"));
        }

        let functional = FunctionalBlock {
            coordinate: e.count("functional.coordinate", 0)?,
            override_ui: e.bool("functional.override_ui", false)?,
            lower: e.real("functional.lower", f64::NEG_INFINITY)?,
            upper: e.real("functional.upper", f64::INFINITY)?,
        };
        if !(functional.lower < functional.upper) {
            return Err(ConfigError::new("functional.lower", "lower barrier must be below the upper barrier"));
        }

        let oracle = match e.take("run.oracle") {
            None => None,
            Some(v) if v == "up_in_closed_form" => Some(OracleSpec::UpInClosedForm),
            Some(v) => Some(OracleSpec::Value(parse_real(&v).ok_or_else(|| {
                ConfigError::new("run.oracle", format!("expected a number or `up_in_closed_form`, got `{v}`"))
            })?)),
        };
        let run = RunBlock {
            n_paths: e.count("run.n_paths", 10_000)?,
            seed: e.count("run.seed", 1)? as u64,
            workers: e.count("run.workers", 0)?,
            h_grid: e.list("run.h_grid", &[])?,
            oracle,
            bias_c: e.real("run.bias_c", pathfunc_core::estimator::DEFAULT_BIAS_C)?,
            ui_paths: e.count("run.ui_paths", 1000)?,
        };
        if run.n_paths < 2 {
            return Err(ConfigError::new("run.n_paths", "need at least 2 paths"));
        }

        let check = CheckBlock {
            probe_y: e.list("check.probe_y", &[0.5, 1.0, 2.0])?,
            probe_t: e.list("check.probe_t", &[0.0, 0.5])?,
            n_draws: e.count("check.n_draws", 1_000_000)?,
            c: e.real("check.c", 1.0)?,
        };

        let output = OutputBlock {
            format: e.choice(
                "output.format",
                Some(OutputFormat::Table),
                &[("table", OutputFormat::Table), ("csv", OutputFormat::Csv)],
            )?,
            path: e.take("output.path"),
            timing: e.bool("output.timing", true)?,
        };

        if let Some(key) = e.map.keys().next() {
            return Err(ConfigError::new(key.clone(), "unknown key"));
        }
        Ok(Self { model, scheme, payoff, functional, run, check, output })
    }

    /// Writes every key explicitly; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let m = &self.model;
        kv("model.kind", &m.kind.name());
        kv("model.r", &m.r);
        kv("model.sigma", &m.sigma);
        kv("model.x0", &m.x0);
        kv("model.y0", &m.y0);
        kv("model.rho", &m.rho);
        kv("model.mu", &m.mu);
        kv("model.b_vol", &m.b_vol);
        kv("model.vol_fn", &m.vol_fn.name());
        kv("model.vol_p", &m.vol_p);
        kv("model.drift", &m.drift);
        kv("model.diffusion", &m.diffusion);

        let sc = &self.scheme;
        kv("scheme.kind", &sc.kind.name());
        kv("scheme.h", &sc.h);
        match sc.cap {
            Some(CapSpec::InverseH) => kv("scheme.cap", &"1/h"),
            Some(CapSpec::Level(c)) => kv("scheme.cap", &c),
            None => {}
        }
        if let Some(eps) = sc.epsilon {
            kv("scheme.epsilon", &eps);
        }
        if let Some(k) = sc.qu_k {
            kv("scheme.qu_k", &k);
        }

        let p = &self.payoff;
        kv("payoff.kind", &p.kind.name());
        kv("payoff.strike", &p.strike);
        kv("payoff.barrier_level", &p.barrier_level);
        kv("payoff.m", &p.m);
        kv("payoff.terminal_kind", &p.terminal_kind.name());
        kv("payoff.constant", &p.constant);
        if let Some(r) = p.rate {
            kv("payoff.rate", &r);
        }

        let f = &self.functional;
        kv("functional.coordinate", &f.coordinate);
        kv("functional.override_ui", &f.override_ui);
        kv("functional.lower", &f.lower);
        kv("functional.upper", &f.upper);

        let r = &self.run;
        kv("run.n_paths", &r.n_paths);
        kv("run.seed", &r.seed);
        kv("run.workers", &r.workers);
        if !r.h_grid.is_empty() {
            kv("run.h_grid", &join(&r.h_grid));
        }
        match r.oracle {
            Some(OracleSpec::UpInClosedForm) => kv("run.oracle", &"up_in_closed_form"),
            Some(OracleSpec::Value(v)) => kv("run.oracle", &v),
            None => {}
        }
        kv("run.bias_c", &r.bias_c);
        kv("run.ui_paths", &r.ui_paths);

        let c = &self.check;
        kv("check.probe_y", &join(&c.probe_y));
        kv("check.probe_t", &join(&c.probe_t));
        kv("check.n_draws", &c.n_draws);
        kv("check.c", &c.c);

        let o = &self.output;
        kv("output.format", &match o.format {
            OutputFormat::Table => "table",
            OutputFormat::Csv => "csv",
        });
        if let Some(path) = &o.path {
            kv("output.path", path);
        }
        kv("output.timing", &o.timing);
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
