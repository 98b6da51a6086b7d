use serde::{Deserialize, Serialize};

use super::config::{SessionConfig, SessionMode};
use super::wire::ClientMessage;
use super::PipelineError;
use crate::eog::EogDecoder;
use crate::hmm::{GaussianHmm, ThoughtDecoder, ThoughtEstimate};
use crate::signal_io::{EogFrame, MetricSample, Record};
use crate::swarm::{centroid, mean_nearest_neighbour, GainPreset, Gains, Integrator, Point, SwarmState};
use crate::{Direction, Thought};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSource {
    Decoded,
    OperatorInjected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    #[default]
    Decoded,
    /// Decoders keep running but only operator commands change the gains
    /// and the drive.
    Manual,
}

/// Active gains and drive, with the origin of their latest change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub a: f64,
    pub b: f64,
    pub v: Point,
    pub source: ParamSource,
    /// When the latest change happened.
    pub t_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPosition {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtView {
    pub state: usize,
    pub posterior: Vec<f64>,
    pub label: Option<Thought>,
    pub low_confidence: bool,
    /// Timestamp of the metric sample behind the estimate.
    pub t_ms: u64,
}

impl From<&ThoughtEstimate> for ThoughtView {
    fn from(e: &ThoughtEstimate) -> Self {
        Self {
            state: e.state,
            posterior: e.posterior.clone(),
            label: e.thought,
            low_confidence: e.low_confidence,
            t_ms: e.t_ms,
        }
    }
}

mod eye_field {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::Direction;

    pub fn serialize<S: Serializer>(eye: &Option<Direction>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(eye.map_or("None", Direction::as_str))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Direction>, D::Error> {
        let text = String::deserialize(d)?;
        if text == "None" {
            return Ok(None);
        }
        text.parse().map(Some).map_err(D::Error::custom)
    }
}

/// The swarm and its control state after one tick; serializes to the wire
/// `frame` message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "frame")]
pub struct FrameRecord {
    pub t_ms: u64,
    pub tick: u64,
    pub robots: Vec<RobotPosition>,
    pub centroid: Point,
    pub nn_dist: f64,
    /// Latest thought estimate; `null` until the first metric sample.
    pub thought: Option<ThoughtView>,
    /// Most recent eye command, decoded or injected.
    #[serde(with = "eye_field")]
    pub eye: Option<Direction>,
    pub theta: ControlParams,
    pub mode: ControlMode,
    /// Signals lagged the tick clock; the tick ran on the previous parameters.
    pub underrun: bool,
}

impl FrameRecord {
    pub fn positions(&self) -> Vec<Point> {
        self.robots.iter().map(|r| [r.x, r.y]).collect()
    }
}

/// Tick state machine.
///
/// Per tick the caller feeds every signal record stamped at or before
/// [`time_ms`](Self::time_ms), then any operator commands, then calls
/// [`advance`](Self::advance) to integrate one period and obtain the frame.
/// Decoded thoughts change the gains only when the decoded label changes,
/// and decoded eye commands set the drive; both are ignored in manual mode.
pub struct ControlLoop {
    rate_hz: f64,
    period_s: f64,
    drive_speed: f64,
    preset: GainPreset,
    thoughts: ThoughtDecoder,
    eyes: EogDecoder,
    integrator: Integrator,
    swarm: SwarmState,
    params: ControlParams,
    mode: ControlMode,
    last_eye: Option<Direction>,
    decoded_thought: Option<Thought>,
    estimate: Option<ThoughtEstimate>,
    tick: u64,
    signals_done: bool,
}

impl ControlLoop {
    pub fn new(config: &SessionConfig, model: GaussianHmm) -> Result<Self, PipelineError> {
        if model.thought_assignment.is_none() {
            return Err(PipelineError::Validation("model has no thought assignment; train it first".into()));
        }
        let swarm = config.initial_swarm()?;
        Ok(Self {
            rate_hz: config.loop_rate_hz,
            period_s: 1.0 / config.loop_rate_hz,
            drive_speed: config.drive_speed,
            preset: config.gains.clone(),
            thoughts: ThoughtDecoder::new(model)?,
            eyes: EogDecoder::new(config.eog.clone())?,
            integrator: Integrator::default(),
            params: ControlParams {
                a: swarm.a,
                b: swarm.b,
                v: [0.0, 0.0],
                source: ParamSource::Decoded,
                t_ms: 0,
            },
            swarm,
            mode: ControlMode::Decoded,
            last_eye: None,
            decoded_thought: None,
            estimate: None,
            tick: 0,
            signals_done: false,
        })
    }

    /// Start of the current tick, ms.
    pub fn time_ms(&self) -> f64 {
        self.tick as f64 * 1000.0 / self.rate_hz
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn swarm(&self) -> &SwarmState {
        &self.swarm
    }

    pub fn params(&self) -> &ControlParams {
        &self.params
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn estimate(&self) -> Option<&ThoughtEstimate> {
        self.estimate.as_ref()
    }

    fn now_ms(&self) -> u64 {
        self.time_ms().floor() as u64
    }

    fn set_gains(&mut self, gains: Gains, source: ParamSource, t_ms: u64) {
        self.params.a = gains.a;
        self.params.b = gains.b;
        self.params.source = source;
        self.params.t_ms = t_ms;
    }

    fn set_drive(&mut self, v: Point, source: ParamSource, t_ms: u64) {
        self.params.v = v;
        self.params.source = source;
        self.params.t_ms = t_ms;
    }

    fn drive_for(&self, direction: Direction) -> Point {
        let [x, y] = direction.unit();
        [x * self.drive_speed, y * self.drive_speed]
    }

    pub fn ingest(&mut self, record: &Record) -> Result<(), PipelineError> {
        match record {
            Record::Metric(sample) => self.ingest_metric(sample),
            Record::Eog(frame) => {
                self.ingest_eog(frame);
                Ok(())
            }
        }
    }

    pub fn ingest_metric(&mut self, sample: &MetricSample) -> Result<(), PipelineError> {
        let estimate = self.thoughts.step(sample)?;
        let thought = estimate.thought;
        self.estimate = Some(estimate);
        if let Some(thought) = thought {
            if self.decoded_thought != Some(thought) {
                self.decoded_thought = Some(thought);
                if self.mode == ControlMode::Decoded {
                    let gains = self.preset.gains(thought, self.swarm.len())?;
                    self.set_gains(gains, ParamSource::Decoded, sample.t_ms);
                }
            }
        }
        Ok(())
    }

    pub fn ingest_eog(&mut self, frame: &EogFrame) {
        let commands = self.eyes.push(frame);
        self.apply_eye_commands(&commands, frame.t_ms);
    }

    fn apply_eye_commands(&mut self, commands: &[crate::eog::EyeCommand], t_ms: u64) {
        if self.mode != ControlMode::Decoded {
            return;
        }
        if let Some(last) = commands.last() {
            self.last_eye = Some(last.direction);
            let v = self.drive_for(last.direction);
            self.set_drive(v, ParamSource::Decoded, t_ms);
        }
    }

    /// Flushes the eye decoder's pending window once the stream has ended.
    pub fn finish_signals(&mut self) {
        if std::mem::replace(&mut self.signals_done, true) {
            return;
        }
        let commands = self.eyes.finish();
        let t = self.now_ms();
        self.apply_eye_commands(&commands, t);
    }

    pub fn command(&mut self, message: &ClientMessage) -> Result<(), PipelineError> {
        let now = self.now_ms();
        let src = ParamSource::OperatorInjected;
        match *message {
            ClientMessage::Eye { dir } => {
                self.last_eye = Some(dir);
                let v = self.drive_for(dir);
                self.set_drive(v, src, now);
            }
            ClientMessage::Thought { label } => {
                let gains = self.preset.gains(label, self.swarm.len())?;
                self.set_gains(gains, src, now);
            }
            ClientMessage::Gains { a, b } => {
                let gains = Gains::new(a, b);
                if !gains.is_valid() {
                    return Err(PipelineError::Protocol(format!("gains must be positive, got a={a} b={b}")));
                }
                self.set_gains(gains, src, now);
            }
            ClientMessage::Halt => self.set_drive([0.0, 0.0], src, now),
            ClientMessage::Mode { value } => {
                self.mode = value;
                self.params.source = src;
                self.params.t_ms = now;
            }
        }
        Ok(())
    }

    /// Integrates one period under the active parameters.
    pub fn advance(&mut self, underrun: bool) -> Result<FrameRecord, PipelineError> {
        self.swarm.set_gains(Gains::new(self.params.a, self.params.b));
        self.swarm.drive = self.params.v;
        let (next, report) = self.integrator.step(&self.swarm, self.period_s)?;
        if report.clamp_events > 0 {
            log::debug!("tick {}: {} clamped interactions", self.tick, report.clamp_events);
        }
        self.swarm = next;
        self.tick += 1;
        Ok(self.frame(underrun))
    }

    pub fn frame(&self, underrun: bool) -> FrameRecord {
        let positions = &self.swarm.positions;
        FrameRecord {
            t_ms: self.now_ms(),
            tick: self.tick,
            robots: positions
                .iter()
                .enumerate()
                .map(|(id, p)| RobotPosition { id, x: p[0], y: p[1] })
                .collect(),
            centroid: centroid(positions),
            nn_dist: mean_nearest_neighbour(positions),
            thought: self.estimate.as_ref().map(ThoughtView::from),
            eye: self.last_eye,
            theta: self.params,
            mode: self.mode,
            underrun,
        }
    }
}

/// Runs a control session as fast as possible, handing each frame to `sink`.
/// Returns the number of frames produced.
pub fn run_batch<F>(config: &SessionConfig, mut sink: F) -> Result<u64, PipelineError>
where
    F: FnMut(&FrameRecord) -> Result<(), PipelineError>,
{
    if config.mode == SessionMode::Train {
        return Err(PipelineError::Config("control sessions need mode replay or live-sim".into()));
    }
    config.validate()?;
    let model_path = config.model.as_ref().expect("validated");
    let model = GaussianHmm::load(model_path)?;
    let records = config.signals()?.map(|t| t.records).unwrap_or_default();
    let end_ms = match (config.duration_s, records.last()) {
        (Some(d), _) => d * 1000.0,
        (None, Some(last)) => last.t_ms() as f64,
        (None, None) => {
            return Err(PipelineError::Config("a session without signals needs duration_s".into()));
        }
    };
    let mut control = ControlLoop::new(config, model)?;
    let mut cursor = 0;
    let mut frames = 0;
    while control.time_ms() < end_ms {
        let now = control.time_ms();
        while let Some(record) = records.get(cursor).filter(|r| r.t_ms() as f64 <= now) {
            control.ingest(record)?;
            cursor += 1;
        }
        if cursor == records.len() {
            control.finish_signals();
        }
        sink(&control.advance(false)?)?;
        frames += 1;
    }
    Ok(frames)
}

/// Batch control session collecting every frame.
pub fn run_control_session(config: &SessionConfig) -> Result<Vec<FrameRecord>, PipelineError> {
    let mut frames = Vec::new();
    run_batch(config, |f| {
        frames.push(f.clone());
        Ok(())
    })?;
    Ok(frames)
}
