//! Signal records, the line-oriented trace file, timed replay, and the
//! synthetic trace generator.

mod replay;
mod synth;
mod trace;

pub use replay::{replay, Replay, REPLAY_JITTER_MS};
pub use synth::{synthesize, BlinkEvent, MetricSegment, SaccadeEvent, SynthSpec};
pub use trace::{format_real, parse_trace, quantize, read_trace, write_trace, TraceFile, TraceHeader};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("invalid synthesis spec: {0}")]
    Spec(String),
    #[error("replay speed must be finite and >= 0, got {0}")]
    Speed(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The four frontal electrodes used for eye tracking, in file column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Electrode {
    Af3 = 0,
    Af4 = 1,
    F7 = 2,
    F8 = 3,
}

impl Electrode {
    pub const ALL: [Electrode; 4] = [Electrode::Af3, Electrode::Af4, Electrode::F7, Electrode::F8];

    pub fn name(self) -> &'static str {
        match self {
            Electrode::Af3 => "AF3",
            Electrode::Af4 => "AF4",
            Electrode::F7 => "F7",
            Electrode::F8 => "F8",
        }
    }
}

/// Potentials of all four electrodes at one instant, microvolts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EogFrame {
    pub t_ms: u64,
    pub potentials: [f64; 4],
}

impl EogFrame {
    pub fn get(&self, electrode: Electrode) -> f64 {
        self.potentials[electrode as usize]
    }
}

/// The three headset performance metrics, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub t_ms: u64,
    pub engagement: f64,
    pub excitement: f64,
    pub meditation: f64,
}

impl MetricSample {
    pub fn new(t_ms: u64, engagement: f64, excitement: f64, meditation: f64) -> Result<Self, String> {
        let sample = Self {
            t_ms,
            engagement,
            excitement,
            meditation,
        };
        sample.check()?;
        Ok(sample)
    }

    pub fn from_vector(t_ms: u64, v: [f64; 3]) -> Result<Self, String> {
        Self::new(t_ms, v[0], v[1], v[2])
    }

    pub fn vector(&self) -> [f64; 3] {
        [self.engagement, self.excitement, self.meditation]
    }

    pub fn check(&self) -> Result<(), String> {
        for (name, v) in [
            ("engagement", self.engagement),
            ("excitement", self.excitement),
            ("meditation", self.meditation),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} = {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Record {
    Eog(EogFrame),
    Metric(MetricSample),
}

impl Record {
    pub fn t_ms(&self) -> u64 {
        match self {
            Record::Eog(f) => f.t_ms,
            Record::Metric(m) => m.t_ms,
        }
    }
}
