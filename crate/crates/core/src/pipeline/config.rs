use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::eog::EogConfig;
use crate::hmm::{ThoughtSchedule, DEFAULT_AGREEMENT_FLOOR, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::signal_io::{read_trace, synthesize, SynthSpec, TraceFile};
use crate::swarm::{Formation, GainPreset, SwarmState};
use crate::{Direction, Thought};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionMode {
    Train,
    Replay,
    LiveSim,
}

/// Expected behaviour over one interval of a scripted mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionStep {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thought: Option<Thought>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

/// Everything a session needs; read from and written to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub mode: SessionMode,
    pub seed: u64,
    /// Signal trace file. Mutually exclusive with `synth`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub robots: usize,
    pub robot_radius: f64,
    pub loop_rate_hz: f64,
    /// Drive magnitude set by an eye command, m/s.
    pub drive_speed: f64,
    /// Trace replay speed; 0 runs as fast as possible.
    pub replay_speed: f64,
    /// Session length; defaults to the end of the signal trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    /// Gains before the first decoded thought.
    pub initial_thought: Thought,
    pub formation: Formation,
    pub gains: GainPreset,
    pub eog: EogConfig,
    pub max_iter: usize,
    pub tol: f64,
    pub agreement_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ThoughtSchedule>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mission: Vec<MissionStep>,
    /// Synthetic signals generated from `seed`. Kept last so the TOML
    /// tables follow the plain keys.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mode: SessionMode::Replay,
            seed: 0,
            trace: None,
            model: None,
            robots: 128,
            robot_radius: 0.05,
            loop_rate_hz: 30.0,
            drive_speed: 0.1,
            replay_speed: 0.0,
            duration_s: None,
            initial_thought: Thought::Aggregate,
            formation: Formation::default(),
            gains: GainPreset::formula(),
            eog: EogConfig::default(),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            agreement_floor: DEFAULT_AGREEMENT_FLOOR,
            schedule: None,
            mission: Vec::new(),
            synth: None,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("session config serializes")
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let mut config = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            for slot in [&mut config.trace, &mut config.model] {
                if let Some(p) = slot.as_mut() {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(config)
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if !(self.loop_rate_hz > 0.0 && self.loop_rate_hz.is_finite()) {
            return bad(format!("loop_rate_hz must be positive, got {}", self.loop_rate_hz));
        }
        if self.robots == 0 {
            return bad("robots must be at least 1".into());
        }
        if !(self.robot_radius > 0.0 && self.robot_radius.is_finite()) {
            return bad(format!("robot_radius must be positive, got {}", self.robot_radius));
        }
        if !(self.drive_speed >= 0.0 && self.drive_speed.is_finite()) {
            return bad(format!("drive_speed must be non-negative, got {}", self.drive_speed));
        }
        if !(self.replay_speed >= 0.0 && self.replay_speed.is_finite()) {
            return bad(format!("replay_speed must be non-negative, got {}", self.replay_speed));
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("duration_s must be positive, got {d}"));
            }
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(0.0..=1.0).contains(&self.agreement_floor) {
            return bad(format!("agreement_floor must lie in [0, 1], got {}", self.agreement_floor));
        }
        self.eog.validate()?;
        self.gains.validate()?;
        if self.trace.is_some() && self.synth.is_some() {
            return bad("set either trace or synth, not both".into());
        }
        if let Some(spec) = &self.synth {
            spec.validate()?;
        }
        if let Some(schedule) = &self.schedule {
            schedule.validate()?;
        }
        for (k, step) in self.mission.iter().enumerate() {
            if !(step.start_s >= 0.0 && step.end_s > step.start_s) {
                return bad(format!("mission step {k} has an empty interval"));
            }
        }
        let has_signals = self.trace.is_some() || self.synth.is_some();
        match self.mode {
            SessionMode::Train if !has_signals => return bad("train mode needs a trace or synth spec".into()),
            SessionMode::Replay if !has_signals => return bad("replay mode needs a trace or synth spec".into()),
            SessionMode::Replay | SessionMode::LiveSim if self.model.is_none() => {
                return bad("control sessions need a model file".into())
            }
            _ => {}
        }
        if let Some(trace) = &self.trace {
            if !trace.is_file() {
                return bad(format!("trace file {} does not exist", trace.display()));
            }
        }
        if let (Some(model), false) = (&self.model, self.mode == SessionMode::Train) {
            if !model.is_file() {
                return bad(format!("model file {} does not exist", model.display()));
            }
        }
        Ok(())
    }

    /// The session's signal trace, read from disk or synthesized.
    pub fn signals(&self) -> Result<Option<TraceFile>, PipelineError> {
        Ok(match (&self.trace, &self.synth) {
            (Some(path), _) => Some(read_trace(path)?),
            (None, Some(spec)) => Some(synthesize(spec, self.seed)?),
            (None, None) => None,
        })
    }

    pub fn initial_swarm(&self) -> Result<SwarmState, PipelineError> {
        let gains = self.gains.gains(self.initial_thought, self.robots)?;
        Ok(SwarmState::new(
            self.formation.positions(self.robots),
            self.robot_radius,
            gains.a,
            gains.b,
        )?)
    }
}
