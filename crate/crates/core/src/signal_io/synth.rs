//! Deterministic synthetic traces.
//!
//! Saccades and blinks are raised-cosine pulses `A (1 + cos(2 pi (t - t0) / W)) / 2`
//! over `|t - t0| <= W / 2`. Polarity follows the corneo-retinal dipole: a
//! leftward saccade raises F7 and lowers F8, an upward saccade raises AF3 and
//! AF4, and a blink raises all four electrodes equally.
//!
//! Noise is Gaussian, drawn with `rand_distr::StandardNormal` from ChaCha8
//! seeded by `seed`; the electrode noise uses stream 0 and the metric noise
//! stream 1, so changing one part of a spec leaves the other's noise intact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{quantize, EogFrame, Electrode, MetricSample, Record, TraceError, TraceFile, TraceHeader};
use crate::Direction;

fn default_width_ms() -> f64 {
    250.0
}

fn default_sample_rate() -> f64 {
    128.0
}

fn default_metric_rate() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub time_s: f64,
    pub direction: Direction,
    pub amplitude_uv: f64,
    #[serde(default = "default_width_ms")]
    pub width_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub time_s: f64,
    pub amplitude_uv: f64,
    #[serde(default = "default_width_ms")]
    pub width_ms: f64,
}

/// Metric samples in `[start_s, end_s)` are drawn around `mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub mean: [f64; 3],
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_metric_rate")]
    pub metric_rate_hz: f64,
    #[serde(default)]
    pub noise_sigma_uv: f64,
    /// Constant electrode offsets in AF3, AF4, F7, F8 order.
    #[serde(default)]
    pub offsets_uv: [f64; 4],
    #[serde(default)]
    pub saccades: Vec<SaccadeEvent>,
    #[serde(default)]
    pub blinks: Vec<BlinkEvent>,
    #[serde(default)]
    pub metrics: Vec<MetricSegment>,
}

impl SynthSpec {
    pub fn new(duration_s: f64) -> Self {
        Self {
            duration_s,
            sample_rate_hz: default_sample_rate(),
            metric_rate_hz: default_metric_rate(),
            noise_sigma_uv: 0.0,
            offsets_uv: [0.0; 4],
            saccades: Vec::new(),
            blinks: Vec::new(),
            metrics: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, TraceError> {
        toml::from_str(text).map_err(|e| TraceError::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synth spec serializes")
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let fail = |m: String| Err(TraceError::Spec(m));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return fail(format!("duration {} s must be positive", self.duration_s));
        }
        if !(self.sample_rate_hz > 0.0 && self.metric_rate_hz > 0.0) {
            return fail("rates must be positive".into());
        }
        if self.noise_sigma_uv.is_nan() || self.noise_sigma_uv < 0.0 {
            return fail("noise sigma must be >= 0".into());
        }
        let within = |t: f64| (0.0..=self.duration_s).contains(&t);
        for (k, s) in self.saccades.iter().enumerate() {
            if !within(s.time_s) {
                return fail(format!("saccade {k} at {} s outside [0, {}] s", s.time_s, self.duration_s));
            }
            if !(s.amplitude_uv > 0.0 && s.width_ms > 0.0) {
                return fail(format!("saccade {k} needs positive amplitude and width"));
            }
        }
        for (k, b) in self.blinks.iter().enumerate() {
            if !within(b.time_s) {
                return fail(format!("blink {k} at {} s outside [0, {}] s", b.time_s, self.duration_s));
            }
            if !(b.amplitude_uv > 0.0 && b.width_ms > 0.0) {
                return fail(format!("blink {k} needs positive amplitude and width"));
            }
        }
        for (k, seg) in self.metrics.iter().enumerate() {
            if !(seg.start_s >= 0.0 && seg.start_s < seg.end_s && seg.end_s <= self.duration_s) {
                return fail(format!("metric segment {k} [{}, {}) outside the trace", seg.start_s, seg.end_s));
            }
            if seg.mean.iter().any(|m| !(0.0..=1.0).contains(m)) || seg.sigma.is_nan() || seg.sigma < 0.0 {
                return fail(format!("metric segment {k} needs means in [0, 1] and sigma >= 0"));
            }
        }
        Ok(())
    }
}

fn raised_cosine(t_s: f64, center_s: f64, width_ms: f64) -> f64 {
    let half = width_ms / 2000.0;
    let dt = t_s - center_s;
    if dt.abs() > half {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * dt / half).cos())
    }
}

/// Per-electrode gain of a saccade in each direction, AF3, AF4, F7, F8.
fn saccade_pattern(direction: Direction) -> [f64; 4] {
    match direction {
        Direction::Left => [0.0, 0.0, 1.0, -1.0],
        Direction::Right => [0.0, 0.0, -1.0, 1.0],
        Direction::Up => [1.0, 1.0, 0.0, 0.0],
        Direction::Down => [-1.0, -1.0, 0.0, 0.0],
    }
}

pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<TraceFile, TraceError> {
    spec.validate()?;
    let mut eog_rng = ChaCha8Rng::seed_from_u64(seed);
    eog_rng.set_stream(0);
    let mut metric_rng = ChaCha8Rng::seed_from_u64(seed);
    metric_rng.set_stream(1);

    let n_eog = (spec.duration_s * spec.sample_rate_hz).floor() as usize;
    let mut eog = Vec::with_capacity(n_eog);
    for k in 0..n_eog {
        let t_s = k as f64 / spec.sample_rate_hz;
        let mut potentials = spec.offsets_uv;
        for s in &spec.saccades {
            let shape = s.amplitude_uv * raised_cosine(t_s, s.time_s, s.width_ms);
            if shape != 0.0 {
                for (p, g) in potentials.iter_mut().zip(saccade_pattern(s.direction)) {
                    *p += g * shape;
                }
            }
        }
        for b in &spec.blinks {
            let shape = b.amplitude_uv * raised_cosine(t_s, b.time_s, b.width_ms);
            potentials.iter_mut().for_each(|p| *p += shape);
        }
        for electrode in Electrode::ALL {
            let z: f64 = StandardNormal.sample(&mut eog_rng);
            let p = &mut potentials[electrode as usize];
            *p = quantize(*p + spec.noise_sigma_uv * z);
        }
        eog.push(EogFrame {
            t_ms: (k as f64 * 1000.0 / spec.sample_rate_hz).floor() as u64,
            potentials,
        });
    }

    let n_metric = (spec.duration_s * spec.metric_rate_hz).floor() as usize;
    let mut metrics = Vec::new();
    for j in 0..n_metric {
        let t_s = j as f64 / spec.metric_rate_hz;
        let Some(seg) = spec.metrics.iter().find(|s| s.start_s <= t_s && t_s < s.end_s) else {
            continue;
        };
        let mut v = [0.0; 3];
        for (slot, mean) in v.iter_mut().zip(seg.mean) {
            let z: f64 = StandardNormal.sample(&mut metric_rng);
            *slot = quantize((mean + seg.sigma * z).clamp(0.0, 1.0));
        }
        let t_ms = (j as f64 * 1000.0 / spec.metric_rate_hz).floor() as u64;
        metrics.push(MetricSample::from_vector(t_ms, v).map_err(TraceError::Spec)?);
    }

    // Merge by timestamp; EOG first on ties.
    let mut records = Vec::with_capacity(eog.len() + metrics.len());
    let mut metric_iter = metrics.into_iter().peekable();
    for frame in eog {
        while let Some(m) = metric_iter.next_if(|m| m.t_ms < frame.t_ms) {
            records.push(Record::Metric(m));
        }
        records.push(Record::Eog(frame));
    }
    records.extend(metric_iter.map(Record::Metric));

    Ok(TraceFile {
        header: TraceHeader {
            version: 1,
            sample_rate_hz: spec.sample_rate_hz,
            metric_rate_hz: spec.metric_rate_hz,
        },
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_seconds_at_128_hz() {
        let trace = synthesize(&SynthSpec::new(60.0), 1).unwrap();
        assert_eq!(trace.eog_frames().count(), 7680);
        trace.validate().unwrap();
    }

    #[test]
    fn null_spec_is_silent_and_metrics_sit_on_means() {
        let mut spec = SynthSpec::new(10.0);
        spec.metrics.push(MetricSegment {
            start_s: 0.0,
            end_s: 10.0,
            mean: [0.2, 0.5, 0.8],
            sigma: 0.0,
        });
        let trace = synthesize(&spec, 7).unwrap();
        assert!(trace.eog_frames().all(|f| f.potentials == [0.0; 4]));
        let metrics: Vec<_> = trace.metric_samples().collect();
        assert_eq!(metrics.len(), 20);
        assert!(metrics.iter().all(|m| m.vector() == [0.2, 0.5, 0.8]));
    }

    #[test]
    fn left_saccade_polarity() {
        let mut spec = SynthSpec::new(4.0);
        spec.saccades.push(SaccadeEvent {
            time_s: 2.0,
            direction: Direction::Left,
            amplitude_uv: 150.0,
            width_ms: 250.0,
        });
        let trace = synthesize(&spec, 0).unwrap();
        let at = trace.eog_frames().find(|f| f.t_ms == 2000).unwrap();
        assert_eq!(at.get(Electrode::F7), 150.0);
        assert_eq!(at.get(Electrode::F8), -150.0);
        assert_eq!(at.get(Electrode::Af3), 0.0);
    }

    #[test]
    fn every_event_kind_has_its_dipole_sign_pattern() {
        for direction in Direction::ALL {
            let mut spec = SynthSpec::new(2.0);
            spec.saccades.push(SaccadeEvent { time_s: 1.0, direction, amplitude_uv: 80.0, width_ms: 250.0 });
            let trace = synthesize(&spec, 0).unwrap();
            let peak = trace.eog_frames().find(|f| f.t_ms == 1000).unwrap();
            let signs = peak.potentials.map(|p| p.signum() as i32 * (p != 0.0) as i32);
            let expected = saccade_pattern(direction).map(|g| g as i32);
            assert_eq!(signs, expected, "{direction}");
        }
        let mut spec = SynthSpec::new(2.0);
        spec.blinks.push(BlinkEvent { time_s: 1.0, amplitude_uv: 300.0, width_ms: 250.0 });
        let trace = synthesize(&spec, 0).unwrap();
        let peak = trace.eog_frames().find(|f| f.t_ms == 1000).unwrap();
        assert_eq!(peak.potentials, [300.0; 4]);
    }

    #[test]
    fn seeded_output_is_deterministic() {
        let mut spec = SynthSpec::new(5.0);
        spec.noise_sigma_uv = 20.0;
        spec.metrics.push(MetricSegment { start_s: 0.0, end_s: 5.0, mean: [0.5; 3], sigma: 0.1 });
        let a = synthesize(&spec, 42).unwrap().to_text();
        let b = synthesize(&spec, 42).unwrap().to_text();
        let c = synthesize(&spec, 43).unwrap().to_text();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn events_outside_duration_are_rejected() {
        let mut spec = SynthSpec::new(5.0);
        spec.blinks.push(BlinkEvent { time_s: 6.0, amplitude_uv: 300.0, width_ms: 250.0 });
        assert!(matches!(synthesize(&spec, 0), Err(TraceError::Spec(_))));
    }

    #[test]
    fn toml_spec_uses_defaults() {
        let spec = SynthSpec::from_toml(
            "duration_s = 3\n[[saccades]]\ntime_s = 1.5\ndirection = \"Up\"\namplitude_uv = 100\n",
        )
        .unwrap();
        assert_eq!(spec.sample_rate_hz, 128.0);
        assert_eq!(spec.saccades[0].width_ms, 250.0);
        assert_eq!(SynthSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }
}
