use thiserror::Error;

/// Errors raised by the framework and the systems built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("space mismatch: `{left}` vs `{right}`")]
    SpaceMismatch { left: String, right: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// State norm exceeded the ball confinement by more than the allowed margin.
    #[error(
        "state left the phase space (norm {norm:.6e}, ball radius {radius:.6e}) for seed {seed}"
    )]
    OutsideBall {
        seed: String,
        norm: f64,
        radius: f64,
    },

    #[error("solver blow-up for seed {seed}: norm {norm:.6e}")]
    BlowUp { seed: String, norm: f64 },

    /// No trajectory of the family passes through the given point at the given time.
    #[error("no trajectory through the given state at s = {s}")]
    NoTrajectory { s: f64 },

    #[error("branch {branch} out of range (family has {count})")]
    BranchOutOfRange { branch: usize, count: usize },

    #[error("ode solver: {0}")]
    Solver(String),

    #[error("unsupported for system `{system}`: {what}")]
    Unsupported { system: String, what: String },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
