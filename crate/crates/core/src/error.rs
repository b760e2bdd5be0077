use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("propagation failed at step {step}: {reason}")]
    Propagation { step: usize, reason: String },

    #[error(
        "solver drift at step {step} (s = {s}): orthogonality defect {defect:.3e} exceeds {limit:.1e}; retry with a smaller time step"
    )]
    SolverDrift {
        step: usize,
        s: f64,
        defect: f64,
        limit: f64,
    },

    #[error("x = {x} is outside the achievable interval [{lo}, {hi}] of the curve derivative")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("degenerate observable: variance {0:e} is not positive")]
    DegenerateObservable(f64),

    #[error("{what} has dimension {dimension}, above the cap {cap}{hint}")]
    Size {
        what: &'static str,
        dimension: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    Dependency(String),

    #[error("invariant `{name}` violated: {detail}")]
    Invariant { name: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invariant {
            name: name.into(),
            detail: detail.into(),
        }
    }
}
