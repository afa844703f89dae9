use thiserror::Error;

/// Coarse failure class, used by front ends to pick an exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("quadrature did not converge (achieved error estimate {residual:.3e})")]
    Quadrature { residual: f64 },
    #[error("exponential fit did not converge (best max residual {residual:.3e})")]
    FitNonConvergence { residual: f64 },
    #[error("Hilbert-space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("coupling operator is not Hermitian")]
    NonHermitianCoupling,
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("too many integrator steps (reached t = {t})")]
    MaxSteps { t: f64 },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("inconsistent closed forms: {0}")]
    Inconsistent(String),
    #[error("propagation failed at Lambda = {lambda}, trajectory {trajectory}: {source}")]
    Propagation {
        lambda: String,
        trajectory: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Parse(_) | Error::LengthMismatch(_) => {
                ErrorKind::Config
            }
            Error::Io(_) | Error::Csv(_) => ErrorKind::Io,
            Error::Propagation { source, .. } => source.kind(),
            _ => ErrorKind::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
