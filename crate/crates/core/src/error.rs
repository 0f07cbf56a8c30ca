use alloc::string::String;

/// Errors raised by the beamforming core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The channel realisation is (numerically) rank deficient or yields a
    /// singular constraint system. Callers running Monte-Carlo trials resample.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),
    /// The SINR targets cannot be met within the relay power cap.
    #[error("SINR targets are infeasible")]
    Infeasible,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// Two routes that must agree (e.g. bisection and closed-form scaling) did not.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = core::result::Result<T, Error>;
