use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("field mean {mean:e} exceeds the zero-mean tolerance")]
    MeanViolation { mean: f64 },
    #[error("time step {dt:e} violates the advective CFL limit; use dt <= {suggested:e}")]
    StepSize { dt: f64, suggested: f64 },
    #[error("time ordering error: end time {t:e} precedes start time {t0:e}")]
    Ordering { t0: f64, t: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("grid n = {n} under-resolves the oscillation; need n >= {required}")]
    Resolution { n: usize, required: usize },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("resample error: {0}")]
    Resample(String),
}

pub type Result<T> = core::result::Result<T, Error>;
