use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("polynomial degree {found} exceeds the supported cap {cap}: {what}")]
    DegreeCap {
        what: String,
        found: usize,
        cap: usize,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("time {t} is outside the trajectory range [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },

    #[error("integration aborted at t = {last_valid_t}: {reason}")]
    IntegrationAborted { last_valid_t: f64, reason: String },

    #[error("profile is not monotone decreasing near r = {r}")]
    NonMonotone { r: f64 },

    #[error("charge integral tail did not converge: tail bound {tail:e} at radius {radius}")]
    TailNotConverged { tail: f64, radius: f64 },

    #[error("trajectory violates the boundedness check: {0}")]
    Unbounded(String),

    #[error("malformed polynomial document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
