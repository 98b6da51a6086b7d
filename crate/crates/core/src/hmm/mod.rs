//! Gaussian-observation hidden Markov model over the three performance
//! metrics: K-means initialization, Baum-Welch training, online forward
//! filtering and the mapping of abstract states onto trained thoughts.

mod assign;
mod kmeans;
mod model;
mod online;
mod train;

pub use assign::{assign_thoughts, Assignment, ScheduleEntry, ThoughtSchedule, DEFAULT_AGREEMENT_FLOOR};
pub use kmeans::{kmeans, kmeans_init, KMeans};
pub use model::{GaussianHmm, COV_FLOOR};
pub use online::{forward_step, ThoughtDecoder, ThoughtEstimate};
pub use train::{baum_welch, forward_backward, Posteriors, TrainingReport, DEFAULT_MAX_ITER, DEFAULT_TOL};

#[cfg(test)]
pub(crate) use model::tests::two_state as model_for_tests;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure at iteration {iteration}: {what}")]
    NumericalFailure { iteration: usize, what: String },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("ambiguous training: best state/thought agreement {agreement:.3} below {floor}; record the training session again")]
    AmbiguousTraining { agreement: f64, floor: f64 },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Observation vector of one metric sample.
pub type Observation = [f64; 3];
