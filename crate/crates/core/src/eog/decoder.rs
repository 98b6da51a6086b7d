use super::{BaselineRemover, Butterworth, EogConfig, EogError, EyeCommand, PeakPicker};
use crate::signal_io::{EogFrame, Electrode};

/// Streaming decoder for one electrode stream: baseline removal, per-channel
/// low-pass, then the horizontal and vertical detectors.
pub struct EogDecoder {
    config: EogConfig,
    baselines: [BaselineRemover; 4],
    filters: [Butterworth; 4],
    held_times: Vec<u64>,
    horizontal: PeakPicker,
    vertical: PeakPicker,
}

impl EogDecoder {
    pub fn new(config: EogConfig) -> Result<Self, EogError> {
        config.validate()?;
        let filter = config.filter()?;
        Ok(Self {
            baselines: std::array::from_fn(|_| BaselineRemover::new(config.tau)),
            filters: std::array::from_fn(|_| filter.clone()),
            held_times: Vec::with_capacity(config.tau),
            horizontal: PeakPicker::horizontal(&config),
            vertical: PeakPicker::vertical(&config),
            config,
        })
    }

    pub fn config(&self) -> &EogConfig {
        &self.config
    }

    pub fn baseline_ready(&self) -> bool {
        self.baselines[0].is_ready()
    }

    pub fn push(&mut self, frame: &EogFrame) -> Vec<EyeCommand> {
        let released: [Vec<f64>; 4] =
            std::array::from_fn(|c| self.baselines[c].push(frame.potentials[c]));
        self.held_times.push(frame.t_ms);
        let n = released[0].len();
        if n == 0 {
            return Vec::new();
        }
        let times: Vec<u64> = self.held_times.drain(..).collect();
        let mut out = Vec::new();
        for (k, &t_ms) in times.iter().enumerate().take(n) {
            let f: [f64; 4] = std::array::from_fn(|c| self.filters[c].process(released[c][k]));
            let horizontal = f[Electrode::F7 as usize] - f[Electrode::F8 as usize];
            let vertical = f[Electrode::Af3 as usize] + f[Electrode::Af4 as usize];
            out.extend(self.horizontal.push(horizontal, t_ms));
            out.extend(self.vertical.push(vertical, t_ms));
        }
        out.sort_by_key(|c| c.sample);
        out
    }

    /// Flushes the last complete window at end of stream.
    pub fn finish(&mut self) -> Vec<EyeCommand> {
        let mut out = self.horizontal.finish();
        out.extend(self.vertical.finish());
        out.sort_by_key(|c| c.sample);
        out
    }
}
