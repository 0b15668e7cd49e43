use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{quantity} is outside its domain of validity: {detail}")]
    Domain { quantity: &'static str, detail: String },

    /// A zero quench time must be handled by the analytic sudden path.
    #[error("sudden protocol (tau_q = 0) cannot be integrated in time")]
    SuddenProtocol,

    #[error("integrator failed at t = {t} after {steps} steps: {reason}")]
    Integration { t: f64, steps: usize, reason: String },

    #[error("numerical consistency check failed: {0}")]
    Consistency(String),

    #[error("cumulants are already in the kink convention")]
    AlreadyKinks,

    #[error("cumulant ratio undefined: kappa1 = {0}")]
    UndefinedRatio(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
