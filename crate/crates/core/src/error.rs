use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid time {0}: must be positive")]
    InvalidTime(f64),

    #[error("quadrature did not converge: error estimate {estimate:e} above tolerance {tolerance:e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("time step {dt:e} below floor at t = {t}")]
    StiffnessFailure { t: f64, dt: f64 },

    #[error("non-finite values at t = {t} (numerical artifact, not a detected blow-up)")]
    NumericalBlowupArtifact { t: f64 },

    #[error("fixed-point correction not contractive at t = {t} (relative update {update})")]
    StepRejected { t: f64, update: f64 },

    #[error("schedule is empty: initial step already violates the admissibility gate")]
    ScheduleEmpty,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("sweep failed: {0}")]
    SweepFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Report(e.to_string())
    }
}
