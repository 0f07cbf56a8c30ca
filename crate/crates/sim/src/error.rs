use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] twrelay_core::Error),
    #[error("{failed} of {trials} trials failed and had to be resampled (limit {limit:.0}%)")]
    FailureRate { failed: usize, trials: usize, limit: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl SimError {
    /// 1 for failures, 2 for configuration errors, 3 when too many trials failed.
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            SimError::Config(_) => 2,
            SimError::FailureRate { .. } => 3,
            _ => 1,
        })
    }
}

pub type SimResult<T> = Result<T, SimError>;
