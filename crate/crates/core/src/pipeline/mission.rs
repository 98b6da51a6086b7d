use serde::{Deserialize, Serialize};

use super::config::{MissionStep, SessionConfig, SessionMode};
use super::control::FrameRecord;
use crate::hmm::ThoughtSchedule;
use crate::signal_io::{MetricSegment, SaccadeEvent, SynthSpec};
use crate::swarm::{Formation, GainPreset, Point};
use crate::{Direction, Thought};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionLeg {
    pub thought: Thought,
    pub direction: Direction,
    pub duration_s: f64,
}

/// A scripted drive: a settling period holding the first leg's thought,
/// then one saccade and one held thought per leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub settle_s: f64,
    pub legs: Vec<MissionLeg>,
    pub robots: usize,
    pub drive_speed: f64,
    /// Per-electrode saccade amplitudes, uV.
    pub horizontal_uv: f64,
    pub vertical_uv: f64,
    pub eog_noise_uv: f64,
    pub aggregate_metrics: [f64; 3],
    pub disperse_metrics: [f64; 3],
    pub metric_sigma: f64,
}

impl MissionPlan {
    /// Four equal legs Right, Down, Left, Up (clockwise), aggregating on
    /// the third.
    pub fn rectangle(leg_s: f64) -> Self {
        use Direction::*;
        use Thought::*;
        let leg = |thought, direction| MissionLeg {
            thought,
            direction,
            duration_s: leg_s,
        };
        Self {
            settle_s: 60.0,
            legs: vec![
                leg(Disperse, Right),
                leg(Disperse, Down),
                leg(Aggregate, Left),
                leg(Disperse, Up),
            ],
            robots: 128,
            drive_speed: 2.0,
            horizontal_uv: 200.0,
            vertical_uv: 120.0,
            eog_noise_uv: 20.0,
            aggregate_metrics: [0.2, 0.2, 0.2],
            disperse_metrics: [0.8, 0.8, 0.8],
            metric_sigma: 0.05,
        }
    }

    pub fn metrics_for(&self, thought: Thought) -> [f64; 3] {
        match thought {
            Thought::Aggregate => self.aggregate_metrics,
            Thought::Disperse => self.disperse_metrics,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.settle_s + self.legs.iter().map(|l| l.duration_s).sum::<f64>()
    }

    /// `(start_s, end_s)` of every leg.
    pub fn leg_intervals(&self) -> Vec<(f64, f64)> {
        let mut t = self.settle_s;
        self.legs
            .iter()
            .map(|l| {
                let span = (t, t + l.duration_s);
                t += l.duration_s;
                span
            })
            .collect()
    }

    pub fn synth_spec(&self) -> SynthSpec {
        let mut spec = SynthSpec::new(self.duration_s());
        spec.noise_sigma_uv = self.eog_noise_uv;
        let first = self.legs.first().map_or(Thought::Aggregate, |l| l.thought);
        spec.metrics.push(MetricSegment {
            start_s: 0.0,
            end_s: self.settle_s,
            mean: self.metrics_for(first),
            sigma: self.metric_sigma,
        });
        for (leg, (start, end)) in self.legs.iter().zip(self.leg_intervals()) {
            let amplitude_uv = match leg.direction {
                Direction::Left | Direction::Right => self.horizontal_uv,
                Direction::Up | Direction::Down => self.vertical_uv,
            };
            spec.saccades.push(SaccadeEvent {
                time_s: start,
                direction: leg.direction,
                amplitude_uv,
                width_ms: 250.0,
            });
            spec.metrics.push(MetricSegment {
                start_s: start,
                end_s: end,
                mean: self.metrics_for(leg.thought),
                sigma: self.metric_sigma,
            });
        }
        spec
    }

    /// Metric-only recording of a training protocol following `schedule`.
    pub fn training_spec(&self, schedule: &ThoughtSchedule) -> SynthSpec {
        let mut spec = SynthSpec::new(schedule.end_ms() as f64 / 1000.0);
        spec.metrics = schedule
            .entries
            .iter()
            .map(|e| MetricSegment {
                start_s: e.start_ms as f64 / 1000.0,
                end_s: e.end_ms as f64 / 1000.0,
                mean: self.metrics_for(e.thought),
                sigma: self.metric_sigma,
            })
            .collect();
        spec
    }

    /// 60 s alternating Disperse, Aggregate, Disperse, Aggregate.
    pub fn training_schedule() -> ThoughtSchedule {
        ThoughtSchedule::alternating(
            &[Thought::Disperse, Thought::Aggregate, Thought::Disperse, Thought::Aggregate],
            15_000,
        )
    }

    /// Training session on a synthesized recording of the standard schedule.
    pub fn training_config(&self, model: impl Into<std::path::PathBuf>, seed: u64) -> SessionConfig {
        let schedule = Self::training_schedule();
        SessionConfig {
            mode: SessionMode::Train,
            seed,
            model: Some(model.into()),
            synth: Some(self.training_spec(&schedule)),
            schedule: Some(schedule),
            ..SessionConfig::default()
        }
    }

    pub fn script(&self) -> Vec<MissionStep> {
        let first = self.legs.first().map(|l| l.thought);
        let mut steps = vec![MissionStep {
            start_s: 0.0,
            end_s: self.settle_s,
            thought: first,
            direction: None,
        }];
        for (leg, (start_s, end_s)) in self.legs.iter().zip(self.leg_intervals()) {
            steps.push(MissionStep {
                start_s,
                end_s,
                thought: Some(leg.thought),
                direction: Some(leg.direction),
            });
        }
        steps
    }

    /// Batch replay session running this mission on synthesized signals.
    pub fn session_config(&self, model: impl Into<std::path::PathBuf>, seed: u64) -> SessionConfig {
        SessionConfig {
            mode: SessionMode::Replay,
            seed,
            model: Some(model.into()),
            robots: self.robots,
            drive_speed: self.drive_speed,
            duration_s: Some(self.duration_s()),
            initial_thought: self.legs.first().map_or(Thought::Aggregate, |l| l.thought),
            formation: Formation::Spiral {
                center: [0.0, 0.0],
                spacing: 10.0,
            },
            gains: GainPreset::formula(),
            mission: self.script(),
            synth: Some(self.synth_spec()),
            ..SessionConfig::default()
        }
    }

    pub fn score(&self, frames: &[FrameRecord]) -> MissionScore {
        let centroid_at = |t_s: f64| -> Point {
            let t_ms = (t_s * 1000.0) as u64;
            let k = frames.partition_point(|f| f.t_ms < t_ms).min(frames.len().saturating_sub(1));
            frames.get(k).map_or([0.0, 0.0], |f| f.centroid)
        };
        let mut leg_nn = Vec::new();
        let mut displacements = Vec::new();
        let mut directions_ok = !frames.is_empty();
        for (leg, (start, end)) in self.legs.iter().zip(self.leg_intervals()) {
            let settled = start + 0.5 * (end - start);
            let nn: Vec<f64> = frames
                .iter()
                .filter(|f| (f.t_ms as f64) >= settled * 1000.0 && (f.t_ms as f64) < end * 1000.0)
                .map(|f| f.nn_dist)
                .collect();
            leg_nn.push(nn.iter().sum::<f64>() / nn.len().max(1) as f64);
            let (a, b) = (centroid_at(start), centroid_at(end));
            let d = [b[0] - a[0], b[1] - a[1]];
            let [ux, uy] = leg.direction.unit();
            let len = d[0].hypot(d[1]);
            directions_ok &= len > 0.0 && d[0] * ux + d[1] * uy > 0.9 * len;
            displacements.push(d);
        }
        let start = centroid_at(self.settle_s);
        let end = frames.last().map_or(start, |f| f.centroid);
        let path_scale = displacements.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max);

        // Shoelace over the loop; negative area is clockwise.
        let loop_frames: Vec<Point> = frames
            .iter()
            .filter(|f| f.t_ms as f64 >= self.settle_s * 1000.0)
            .map(|f| f.centroid)
            .collect();
        let area: f64 = loop_frames
            .iter()
            .zip(loop_frames.iter().cycle().skip(1))
            .map(|(p, q)| p[0] * q[1] - q[0] * p[1])
            .sum::<f64>()
            / 2.0;
        MissionScore {
            leg_nn,
            leg_thoughts: self.legs.iter().map(|l| l.thought).collect(),
            displacements,
            start,
            end,
            closure_error: (end[0] - start[0]).hypot(end[1] - start[1]),
            path_scale,
            signed_area: area,
            directions_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionScore {
    /// Mean nearest-neighbour distance over the second half of each leg.
    pub leg_nn: Vec<f64>,
    pub leg_thoughts: Vec<Thought>,
    /// Centroid displacement over each leg.
    pub displacements: Vec<Point>,
    /// Centroid when the first leg starts and at the end.
    pub start: Point,
    pub end: Point,
    pub closure_error: f64,
    /// Longest leg displacement.
    pub path_scale: f64,
    pub signed_area: f64,
    /// Every leg moved within about 25 degrees of its commanded direction.
    pub directions_ok: bool,
}

impl MissionScore {
    pub fn clockwise(&self) -> bool {
        self.signed_area < 0.0
    }

    pub fn closes_within(&self, fraction: f64) -> bool {
        self.closure_error <= fraction * self.path_scale
    }

    /// Every aggregating leg is tighter than every dispersing leg.
    pub fn aggregation_tightest(&self) -> bool {
        let of = |want: Thought| {
            self.leg_nn
                .iter()
                .zip(&self.leg_thoughts)
                .filter(move |(_, t)| **t == want)
                .map(|(nn, _)| *nn)
        };
        let widest_aggregate = of(Thought::Aggregate).fold(f64::NEG_INFINITY, f64::max);
        let tightest_disperse = of(Thought::Disperse).fold(f64::INFINITY, f64::min);
        widest_aggregate < tightest_disperse
    }
}
