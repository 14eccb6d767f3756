use thiserror::Error;

/// Errors raised across the model, drag, integrator and I/O layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("wall distance must be positive, got h = {h}")]
    NonpositiveDistance { h: f64 },

    #[error("power {base}^{exponent} leaves the representable range")]
    Overflow { base: f64, exponent: f64 },

    #[error("lubrication integral diverges for dim = {dim}, alpha = {alpha} (requires alpha > 1/3)")]
    DivergentIntegral { alpha: f64, dim: u8 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    QuadratureFailure { tol: f64, estimate: f64 },

    #[error("step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("limit collision time is undefined for hdot0 = {hdot0} (requires hdot0 < 0)")]
    UndefinedT0 { hdot0: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
