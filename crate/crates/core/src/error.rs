use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid barriers: {0}")]
    InvalidBarrier(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid scheme configuration: {0}")]
    InvalidScheme(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite coefficient at y={y:?}, t={t}")]
    NonFiniteCoefficient { y: Vec<f64>, t: f64 },

    #[error("volatility {sigma} at (y={y}, t={t}) violates the epsilon bound {epsilon}")]
    VolatilityBound {
        sigma: f64,
        y: f64,
        t: f64,
        epsilon: f64,
    },

    #[error("step dt={dt} outside quasi-uniform bounds [{lo}, {hi}] at t={t}")]
    QuasiUniform { dt: f64, lo: f64, hi: f64, t: f64 },

    #[error("model `{0}` does not declare the Lipschitz/Hoelder condition")]
    NotCompliant(String),

    #[error("payoff returned a non-finite value {value} (tau={tau})")]
    NonFinitePayoff { value: f64, tau: f64 },

    #[error("uniform-integrability diagnostic failed: {0}")]
    UiRefused(String),

    #[error("stream {stream}: {source}")]
    Stream {
        stream: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
