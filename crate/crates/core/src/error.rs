use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigen/singular value solver did not converge after {iterations} iterations")]
    SolverFailure { iterations: usize },

    #[error("complete extinction: transmitted rate {rate:e} is below the post-selection threshold")]
    Extinction { rate: f64 },

    #[error("angle undefined: {0}")]
    UndefinedAngle(String),

    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    #[error("no compensation direction: the correlation matrix annihilates the channel axis")]
    NoCompensationDirection,

    #[error("measured concurrence {measured} exceeds baseline {baseline}")]
    Inversion { baseline: f64, measured: f64 },

    #[error("source calibration infeasible: {0}")]
    Calibration(String),

    #[error("tomographic inversion failed: {0}")]
    Tomography(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
