use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The harness maps [`Error::Config`] to exit code 2 and
/// [`Error::Numerical`] to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure in {what}: estimate {estimate:e}, error bound {error_bound:e}")]
    Numerical {
        what: String,
        estimate: f64,
        error_bound: f64,
    },

    #[error("kernel singularity at p = {p:?}, q = {q:?}: use a staggered quadrature grid")]
    Singular { p: [f64; 3], q: [f64; 3] },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("simulation diverged at step {step}: norm {norm:e} exceeds bound {bound:e}")]
    Diverged { step: usize, norm: f64, bound: f64 },

    #[error("memory estimate {required_bytes} B exceeds budget {budget_bytes} B ({detail})")]
    Budget {
        required_bytes: u64,
        budget_bytes: u64,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(what: impl Into<String>, estimate: f64, error_bound: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            estimate,
            error_bound,
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Budget { .. } | Error::Json(_) => 2,
            Error::Io(_) => 2,
            Error::Numerical { .. } | Error::Eigen(_) | Error::Diverged { .. } | Error::Singular { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
