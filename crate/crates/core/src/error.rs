use thiserror::Error;

use crate::controller::StepRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A sub-integrator failed; `stage` names the substep (e.g. `Y^(dt/2)`).
    #[error("integration failed at grid point {point} in {stage}: {reason}")]
    Integration {
        point: usize,
        stage: String,
        reason: String,
    },

    /// The adaptive loop gave up. `log` holds every attempt made so far.
    #[error("{count} consecutive rejections at t = {t:e}")]
    TooManyRejections {
        count: usize,
        t: f64,
        log: Vec<StepRecord>,
    },
}

impl Error {
    /// Tags an integration error with the substep that produced it.
    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Integration { point, reason, .. } => Error::Integration {
                point,
                stage: stage.to_owned(),
                reason,
            },
            other => other,
        }
    }
}
