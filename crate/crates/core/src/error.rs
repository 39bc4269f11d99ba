use thiserror::Error;

/// Errors raised anywhere in the simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance to {body} is {distance:.3e} LU, below the singularity floor {floor:.1e} LU")]
    Singularity {
        body: &'static str,
        distance: f64,
        floor: f64,
    },

    #[error("step size underflow at tau = {tau} (h = {step:.3e})")]
    StepSizeUnderflow { tau: f64, step: f64 },

    #[error("integration exceeded {max_steps} steps at tau = {tau}")]
    TooManySteps { tau: f64, max_steps: usize },

    #[error("non-finite state encountered at tau = {tau}")]
    NonFinite { tau: f64 },

    #[error("differential correction did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not skew-symmetric (symmetric part {residual:.3e})")]
    NotSkewSymmetric { residual: f64 },

    #[error("MRP conversion is singular (1 + beta0 = {margin:.3e})")]
    MrpSingular { margin: f64 },

    #[error("Riccati solver failed: {0}")]
    Riccati(String),

    #[error("degenerate thrust geometry: |r x u| = {cross:.3e}")]
    DegenerateGeometry { cross: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("rejection sampler gave up after {draws} draws")]
    SamplerExhausted { draws: usize },

    #[error("{phase}: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_owned(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with the scenario phase it came from.
    pub fn in_phase(self, phase: &'static str) -> Self {
        Error::Phase {
            phase,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
