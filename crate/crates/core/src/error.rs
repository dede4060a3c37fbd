use thiserror::Error;

/// Errors produced by the model, the solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is missing, non-finite or out of range.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid channel for device {device}: {reason}")]
    InvalidChannel { device: usize, reason: String },

    /// An argument lies outside the domain of a formula (e.g. negative time).
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// A bracketing or bisection loop hit its iteration cap.
    #[error("root finder did not converge after {iterations} iterations (last bracket [{lo:e}, {hi:e}])")]
    SolverFailure { lo: f64, hi: f64, iterations: u32 },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    /// A device would need negative transmit power to satisfy the stationarity
    /// condition, i.e. its harvest cannot fund its circuit power.
    #[error("device {device} cannot sustain its circuit power (transmit power {power:e} W)")]
    InfeasibleDevice { device: usize, power: f64 },

    #[error("brute-force oracle supports at most {max} devices, got {got}")]
    Dimension { max: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::InvalidChannel { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
