//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations are exposed: the pair equilibrium spacing, an
//! interactive swarm that takes thought and eye commands, and a decode of
//! a synthesized EOG trace.

use neuroswarm::eog::{EogConfig, EogDecoder};
use neuroswarm::signal_io::{synthesize, BlinkEvent, Electrode, SaccadeEvent, SynthSpec};
use neuroswarm::swarm::{centroid, equilibrium_distance, mean_nearest_neighbour, Formation, GainPreset, Integrator, SwarmState};
use neuroswarm::{Direction, Thought};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const ROBOT_RADIUS: f64 = 0.05;
const TICK_S: f64 = 1.0 / 30.0;

/// Spacing at which a pair of robots neither attracts nor repels.
#[wasm_bindgen]
pub fn equilibrium_spacing(a: f64, b: f64, radius: f64) -> f64 {
    equilibrium_distance(a, b, radius)
}

#[wasm_bindgen]
pub struct SwarmSim {
    state: SwarmState,
    integrator: Integrator,
    preset: GainPreset,
    thought: Thought,
    drive_speed: f64,
}

#[wasm_bindgen]
impl SwarmSim {
    /// `preset` is "hardware" or "formula". The swarm starts dispersing on a
    /// spiral of the given spacing.
    #[wasm_bindgen(constructor)]
    pub fn new(robots: usize, spacing: f64, preset: &str, drive_speed: f64) -> Result<SwarmSim, String> {
        if robots == 0 {
            return Err("need at least one robot".into());
        }
        let preset = GainPreset::by_name(preset).ok_or_else(|| format!("unknown gain preset '{preset}'"))?;
        let thought = Thought::Disperse;
        let gains = preset.gains(thought, robots).map_err(|e| e.to_string())?;
        let positions = Formation::Spiral {
            center: [0.0, 0.0],
            spacing,
        }
        .positions(robots);
        let state = SwarmState::new(positions, ROBOT_RADIUS, gains.a, gains.b).map_err(|e| e.to_string())?;
        Ok(SwarmSim {
            state,
            integrator: Integrator::default(),
            preset,
            thought,
            drive_speed,
        })
    }

    /// Switches the gains to those of "Aggregate" or "Disperse".
    pub fn set_thought(&mut self, thought: &str) -> Result<(), String> {
        let thought: Thought = thought.parse().map_err(|e: neuroswarm::UnknownLabel| e.to_string())?;
        let gains = self.preset.gains(thought, self.state.len()).map_err(|e| e.to_string())?;
        self.state.set_gains(gains);
        self.thought = thought;
        Ok(())
    }

    /// Sets the drive from an eye direction, or stops it with "halt".
    pub fn steer(&mut self, direction: &str) -> Result<(), String> {
        self.state.drive = if direction.eq_ignore_ascii_case("halt") {
            [0.0, 0.0]
        } else {
            let d: Direction = direction.parse().map_err(|e: neuroswarm::UnknownLabel| e.to_string())?;
            let [x, y] = d.unit();
            [x * self.drive_speed, y * self.drive_speed]
        };
        Ok(())
    }

    /// Advances by whole control ticks covering `seconds`.
    pub fn advance(&mut self, seconds: f64) -> Result<(), String> {
        let ticks = (seconds / TICK_S).round().max(0.0) as usize;
        for _ in 0..ticks {
            self.state = self.integrator.step(&self.state, TICK_S).map_err(|e| e.to_string())?.0;
        }
        Ok(())
    }

    /// Flat `[x0, y0, x1, y1, ...]`.
    pub fn positions(&self) -> Vec<f64> {
        self.state.positions.iter().flatten().copied().collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.state.positions).to_vec()
    }

    pub fn nn_dist(&self) -> f64 {
        mean_nearest_neighbour(&self.state.positions)
    }

    pub fn spacing_target(&self) -> f64 {
        self.state.equilibrium_distance()
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn thought(&self) -> String {
        self.thought.to_string()
    }

    /// `[a, b]`.
    pub fn gains(&self) -> Vec<f64> {
        vec![self.state.a, self.state.b]
    }
}

#[derive(Serialize)]
struct DecodedCommand {
    t_ms: u64,
    direction: Direction,
    peak_uv: f64,
}

#[derive(Serialize)]
struct DecodeResult {
    expected: Vec<String>,
    decoded: Vec<DecodedCommand>,
    /// F7 - F8 and AF3 - AF4 at 32 Hz, for plotting.
    horizontal_uv: Vec<f64>,
    vertical_uv: Vec<f64>,
    sample_rate_hz: f64,
}

/// Synthesizes a trace with one event per two seconds after the baseline
/// period and decodes it. `events` is a whitespace-separated list of
/// L, R, U, D (saccades) and B (blinks). Returns JSON.
#[wasm_bindgen]
pub fn decode_synthetic(events: &str, noise_uv: f64, seed: u32) -> Result<String, String> {
    let mut spec = SynthSpec::new(0.0);
    spec.noise_sigma_uv = noise_uv;
    let mut expected = Vec::new();
    let mut t = 6.3;
    for token in events.split_whitespace() {
        let direction = match token.to_ascii_uppercase().as_str() {
            "L" => Some(Direction::Left),
            "R" => Some(Direction::Right),
            "U" => Some(Direction::Up),
            "D" => Some(Direction::Down),
            "B" => None,
            other => return Err(format!("unknown event '{other}'")),
        };
        match direction {
            Some(direction) => {
                let amplitude_uv = match direction {
                    Direction::Left | Direction::Right => 200.0,
                    Direction::Up | Direction::Down => 120.0,
                };
                spec.saccades.push(SaccadeEvent {
                    time_s: t,
                    direction,
                    amplitude_uv,
                    width_ms: 250.0,
                });
                expected.push(direction.to_string());
            }
            None => spec.blinks.push(BlinkEvent {
                time_s: t,
                amplitude_uv: 250.0,
                width_ms: 250.0,
            }),
        }
        t += 2.0;
    }
    spec.duration_s = t + 1.0;
    let trace = synthesize(&spec, seed.into()).map_err(|e| e.to_string())?;
    let mut decoder = EogDecoder::new(EogConfig::default()).map_err(|e| e.to_string())?;
    let mut commands: Vec<_> = trace.eog_frames().flat_map(|f| decoder.push(f)).collect();
    commands.extend(decoder.finish());
    let frames: Vec<_> = trace.eog_frames().step_by(4).collect();
    let result = DecodeResult {
        expected,
        decoded: commands
            .iter()
            .map(|c| DecodedCommand {
                t_ms: c.t_ms,
                direction: c.direction,
                peak_uv: c.peak_uv,
            })
            .collect(),
        horizontal_uv: frames.iter().map(|f| f.get(Electrode::F7) - f.get(Electrode::F8)).collect(),
        vertical_uv: frames.iter().map(|f| f.get(Electrode::Af3) - f.get(Electrode::Af4)).collect(),
        sample_rate_hz: spec.sample_rate_hz / 4.0,
    };
    Ok(serde_json::to_string(&result).expect("decode result serializes"))
}
