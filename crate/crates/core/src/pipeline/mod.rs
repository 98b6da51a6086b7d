//! The closed loop: signal records feed the thought and eye decoders, which
//! set the swarm's gains and drive, once per control tick.
//!
//! [`ControlLoop`] is the single-threaded tick state machine. Batch sessions
//! run it as fast as possible over a whole trace; [`LiveSession`] paces it on
//! the wall clock with ingestion and broadcast on their own threads, and
//! [`server`] exposes a live session over WebSocket.

mod config;
mod control;
mod live;
mod mission;
mod recording;
#[cfg(feature = "server")]
pub mod server;
mod training;
mod wire;

pub use config::{MissionStep, SessionConfig, SessionMode};
pub use control::{
    run_batch, run_control_session, ControlLoop, ControlMode, ControlParams, FrameRecord, ParamSource, RobotPosition,
    ThoughtView,
};
pub use live::{FrameFeed, LiveOptions, LiveSession, LiveSummary};
pub use mission::{MissionLeg, MissionPlan, MissionScore};
pub use recording::{read_recording, record_frames, FrameRecorder, Recording, RecordingHeader};
pub use training::{decode_agreement, run_training_session, TrainingOutcome, MIN_TRAINING_S};
pub use wire::{error_reply, parse_client_message, ClientMessage};

use thiserror::Error;

use crate::eog::EogError;
use crate::hmm::HmmError;
use crate::signal_io::TraceError;
use crate::swarm::SwarmError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Eog(#[from] EogError),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error("recording {path}: {message} after {frames_written} frames")]
    Recording {
        path: String,
        frames_written: usize,
        message: String,
    },
    #[error("protocol: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure class, for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Numerical,
    Io,
}

impl PipelineError {
    pub fn kind(&self) -> FailureKind {
        match self {
            PipelineError::Io(_) | PipelineError::Recording { .. } => FailureKind::Io,
            PipelineError::Trace(TraceError::Io(_)) | PipelineError::Hmm(HmmError::Io(_)) => FailureKind::Io,
            PipelineError::Hmm(HmmError::NumericalFailure { .. } | HmmError::AmbiguousTraining { .. }) => {
                FailureKind::Numerical
            }
            PipelineError::Swarm(
                SwarmError::Collision { .. } | SwarmError::StepFailed { .. } | SwarmError::NonFinite(_),
            ) => FailureKind::Numerical,
            _ => FailureKind::Validation,
        }
    }
}
