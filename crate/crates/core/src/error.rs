use thiserror::Error;

/// Errors produced by the modelling and optimisation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field violates its invariant. `field` is a dotted path.
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A source lies outside the sampled window (plus one pulse on each side).
    #[error("source at {range_m} m falls outside the radar window (gate offset {offset})")]
    OutOfWindow { range_m: f64, offset: i64 },

    #[error("shift matrix offset {offset} is invalid for the {case} case (L = {n_samples}, window = {n_window})")]
    InvalidShift {
        offset: usize,
        case: &'static str,
        n_samples: usize,
        n_window: usize,
    },

    /// The target response vanishes, so no distortionless filter exists.
    #[error("target response is zero; the waveform does not illuminate the target gate")]
    DegenerateTarget,

    #[error("receive weights must be nonzero")]
    ZeroWeights,

    #[error("cannot project the zero vector onto the energy sphere")]
    ZeroProjection,

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    /// The quadratic program has no feasible point. `farkas_residual` is the
    /// norm of the certificate combination, `certificate_gap` its (positive) bound.
    #[error("QP is infeasible (certificate residual {farkas_residual:.3e}, gap {certificate_gap:.3e})")]
    Infeasible {
        farkas_residual: f64,
        certificate_gap: f64,
    },

    #[error("value out of range for {what}: {value}")]
    OutOfRange { what: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
