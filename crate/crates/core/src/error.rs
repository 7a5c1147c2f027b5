use thiserror::Error;

/// Failures raised by the integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepLimit { t: f64, max_steps: usize },
    #[error("step size underflow (h = {h:e}) at t = {t}; the system is likely too stiff for an explicit method")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite right-hand side value at t = {t}")]
    NonFinite { t: f64 },
    #[error("component {component} reached {value:e} at t = {t}, below the nonnegativity tolerance")]
    Negativity { t: f64, component: usize, value: f64 },
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration or parameter violates a model assumption. `field`
    /// names the offending entry using the configuration key.
    #[error("invalid `{field}`: {message}")]
    Config { field: String, message: String },

    /// A state or argument lies outside the domain of an operation.
    #[error("domain error in {operation}: {message}")]
    Domain { operation: &'static str, message: String },

    #[error("root bracketing failed in {context}: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        context: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("consistency check failed: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Integration(#[from] IntegrationError),

    #[error("integration failed for epsilon = {epsilon}: {source}")]
    IntegrationAt {
        epsilon: f64,
        #[source]
        source: IntegrationError,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn domain(operation: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            operation,
            message: message.into(),
        }
    }

    /// True when the error comes from the numerical machinery rather than
    /// from the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Config { .. } | Error::Domain { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
