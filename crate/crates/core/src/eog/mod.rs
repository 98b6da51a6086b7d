//! Eye-movement decoding from the four frontal electrodes.
//!
//! Horizontal saccades show up as opposite deflections on F7 and F8, so the
//! filtered difference `F7 - F8` carries them while cancelling blinks. Vertical
//! saccades move AF3 and AF4 together; their filtered sum is accepted only
//! inside an amplitude band, which rejects the much larger blinks.

mod baseline;
mod butterworth;
mod decoder;
mod detect;

pub use baseline::{remove_baseline, BaselineOutput, BaselineRemover};
pub use butterworth::{Biquad, Butterworth};
pub use decoder::EogDecoder;
pub use detect::{detect_horizontal, detect_vertical, lowpass, Acceptance, PeakPicker};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EogError {
    #[error("invalid EOG configuration: {0}")]
    Config(String),
    #[error("channel lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Detector parameters. Defaults follow the published decoder: 5 s baseline,
/// 1 s windows, 8th-order 4 Hz low-pass at 128 Hz, 200 uV horizontal
/// threshold and a 150-250 uV vertical band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EogConfig {
    pub tau: usize,
    pub window_w: usize,
    pub filter_order: usize,
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
    pub horiz_threshold_uv: f64,
    pub vert_band_uv: [f64; 2],
    pub min_separation_samples: usize,
}

impl Default for EogConfig {
    fn default() -> Self {
        Self {
            tau: 640,
            window_w: 128,
            filter_order: 8,
            cutoff_hz: 4.0,
            sample_rate_hz: 128.0,
            horiz_threshold_uv: 200.0,
            vert_band_uv: [150.0, 250.0],
            min_separation_samples: 127,
        }
    }
}

impl EogConfig {
    pub fn validate(&self) -> Result<(), EogError> {
        let fail = |msg: String| Err(EogError::Config(msg));
        if self.window_w < 3 {
            return fail(format!("window_w must be at least 3, got {}", self.window_w));
        }
        if self.tau < self.window_w {
            return fail(format!("tau ({}) must be >= window_w ({})", self.tau, self.window_w));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return fail(format!("sample rate must be positive, got {}", self.sample_rate_hz));
        }
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < self.sample_rate_hz / 2.0) {
            return fail(format!(
                "cutoff {} Hz outside (0, {}) Hz",
                self.cutoff_hz,
                self.sample_rate_hz / 2.0
            ));
        }
        if self.horiz_threshold_uv.is_nan() || self.horiz_threshold_uv <= 0.0 {
            return fail("horizontal threshold must be positive".into());
        }
        let [lo, hi] = self.vert_band_uv;
        if !(lo > 0.0 && lo < hi) {
            return fail(format!("vertical band [{lo}, {hi}] must satisfy 0 < lo < hi"));
        }
        if self.min_separation_samples == 0 {
            return fail("min_separation_samples must be positive".into());
        }
        Ok(())
    }

    pub fn filter(&self) -> Result<Butterworth, EogError> {
        Butterworth::lowpass(self.filter_order, self.cutoff_hz, self.sample_rate_hz)
    }

    /// Stream timestamp of sample `index`, whole milliseconds.
    pub fn sample_time_ms(&self, index: usize) -> u64 {
        (index as f64 * 1000.0 / self.sample_rate_hz).floor() as u64
    }
}

/// One decoded eye movement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeCommand {
    /// Index of the detection window.
    pub window: usize,
    pub direction: Direction,
    /// Magnitude of the detected extremum of the filtered combination, uV.
    pub peak_uv: f64,
    /// Sample index of the extremum in the stream.
    pub sample: usize,
    /// Timestamp of the extremum. Includes the filter group delay
    /// (about 26 samples, 203 ms, for the default filter).
    pub t_ms: u64,
}
