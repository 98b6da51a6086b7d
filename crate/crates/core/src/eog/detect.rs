use super::{EogConfig, EogError, EyeCommand};
use crate::Direction;

/// Which extremum magnitudes count as eye movements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceptance {
    /// Magnitude strictly above the threshold.
    Threshold(f64),
    /// Magnitude inside `[lo, hi]`; anything above `hi` is an artifact that
    /// still claims its separation slot.
    Band(f64, f64),
}

enum Verdict {
    Accept,
    Block,
    Ignore,
}

impl Acceptance {
    fn judge(&self, magnitude: f64) -> Verdict {
        match *self {
            Acceptance::Threshold(t) if magnitude > t => Verdict::Accept,
            Acceptance::Threshold(_) => Verdict::Ignore,
            Acceptance::Band(_, hi) if magnitude > hi => Verdict::Block,
            Acceptance::Band(lo, _) if magnitude >= lo => Verdict::Accept,
            Acceptance::Band(..) => Verdict::Ignore,
        }
    }
}

struct Window {
    index: usize,
    start: usize,
    samples: Vec<(f64, u64)>,
    before: Option<f64>,
}

/// Windowed extremum detector over one combined, filtered signal.
///
/// Each complete, non-overlapping window contributes at most its maximum and
/// its minimum. An extremum must be a strict local peak (trough), so the
/// rising edge of a pulse that peaks in the next window is not mistaken for
/// one; checking the right neighbour of the last sample delays a window by
/// one sample. Candidates closer than `min_separation` samples to an earlier
/// accepted or blocking extremum are dropped.
pub struct PeakPicker {
    window_w: usize,
    min_separation: usize,
    acceptance: Acceptance,
    on_peak: Direction,
    on_trough: Direction,
    current: Window,
    pending: Option<Window>,
    last_claim: Option<usize>,
    seen: usize,
}

impl PeakPicker {
    pub fn new(
        window_w: usize,
        min_separation: usize,
        acceptance: Acceptance,
        on_peak: Direction,
        on_trough: Direction,
    ) -> Self {
        Self {
            window_w,
            min_separation,
            acceptance,
            on_peak,
            on_trough,
            current: Window {
                index: 0,
                start: 0,
                samples: Vec::with_capacity(window_w),
                before: None,
            },
            pending: None,
            last_claim: None,
            seen: 0,
        }
    }

    /// Peaks become Left and troughs Right, thresholded.
    pub fn horizontal(config: &EogConfig) -> Self {
        Self::new(
            config.window_w,
            config.min_separation_samples,
            Acceptance::Threshold(config.horiz_threshold_uv),
            Direction::Left,
            Direction::Right,
        )
    }

    /// Peaks become Up and troughs Down, banded.
    pub fn vertical(config: &EogConfig) -> Self {
        let [lo, hi] = config.vert_band_uv;
        Self::new(
            config.window_w,
            config.min_separation_samples,
            Acceptance::Band(lo, hi),
            Direction::Up,
            Direction::Down,
        )
    }

    pub fn samples_seen(&self) -> usize {
        self.seen
    }

    pub fn push(&mut self, x: f64, t_ms: u64) -> Vec<EyeCommand> {
        let mut out = Vec::new();
        if let Some(window) = self.pending.take() {
            self.evaluate(&window, Some(x), &mut out);
        }
        self.seen += 1;
        self.current.samples.push((x, t_ms));
        if self.current.samples.len() == self.window_w {
            let next = Window {
                index: self.current.index + 1,
                start: self.current.start + self.window_w,
                samples: Vec::with_capacity(self.window_w),
                before: Some(x),
            };
            self.pending = Some(std::mem::replace(&mut self.current, next));
        }
        out
    }

    /// Evaluates a completed window still waiting for its right neighbour.
    /// A trailing partial window is discarded.
    pub fn finish(&mut self) -> Vec<EyeCommand> {
        let mut out = Vec::new();
        if let Some(window) = self.pending.take() {
            self.evaluate(&window, None, &mut out);
        }
        out
    }

    fn evaluate(&mut self, window: &Window, after: Option<f64>, out: &mut Vec<EyeCommand>) {
        let samples = &window.samples;
        let value = |k: usize| samples[k].0;
        let left = |k: usize| if k == 0 { window.before } else { Some(value(k - 1)) };
        let right = |k: usize| if k + 1 == samples.len() { after } else { Some(value(k + 1)) };

        let mut hi = 0;
        let mut lo = 0;
        for k in 1..samples.len() {
            if value(k) > value(hi) {
                hi = k;
            }
            if value(k) < value(lo) {
                lo = k;
            }
        }
        let is_peak = matches!((left(hi), right(hi)), (Some(l), Some(r)) if value(hi) > l && value(hi) >= r);
        let is_trough = matches!((left(lo), right(lo)), (Some(l), Some(r)) if value(lo) < l && value(lo) <= r);

        let mut candidates = Vec::with_capacity(2);
        if is_peak && value(hi) > 0.0 {
            candidates.push((hi, self.on_peak));
        }
        if is_trough && value(lo) < 0.0 {
            candidates.push((lo, self.on_trough));
        }
        candidates.sort_by_key(|&(k, _)| k);

        for (k, direction) in candidates {
            let sample = window.start + k;
            if self.last_claim.is_some_and(|last| sample - last < self.min_separation) {
                continue;
            }
            let magnitude = value(k).abs();
            match self.acceptance.judge(magnitude) {
                Verdict::Accept => {
                    self.last_claim = Some(sample);
                    out.push(EyeCommand {
                        window: window.index,
                        direction,
                        peak_uv: magnitude,
                        sample,
                        t_ms: samples[k].1,
                    });
                }
                Verdict::Block => self.last_claim = Some(sample),
                Verdict::Ignore => {}
            }
        }
    }
}

/// Causal low-pass of one channel with the configured Butterworth filter.
pub fn lowpass(channel: &[f64], config: &EogConfig) -> Result<Vec<f64>, EogError> {
    let mut filter = config.filter()?;
    Ok(filter.filter(channel))
}

fn run_detector(
    first: &[f64],
    second: &[f64],
    config: &EogConfig,
    combine: fn(f64, f64) -> f64,
    mut picker: PeakPicker,
) -> Result<Vec<EyeCommand>, EogError> {
    config.validate()?;
    if first.len() != second.len() {
        return Err(EogError::LengthMismatch {
            left: first.len(),
            right: second.len(),
        });
    }
    let a = lowpass(first, config)?;
    let b = lowpass(second, config)?;
    let mut out = Vec::new();
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        out.extend(picker.push(combine(*x, *y), config.sample_time_ms(k)));
    }
    out.extend(picker.finish());
    Ok(out)
}

/// Left/right saccades from baseline-removed F7 and F8.
pub fn detect_horizontal(f7: &[f64], f8: &[f64], config: &EogConfig) -> Result<Vec<EyeCommand>, EogError> {
    run_detector(f7, f8, config, |a, b| a - b, PeakPicker::horizontal(config))
}

/// Up/down saccades from baseline-removed AF3 and AF4.
pub fn detect_vertical(af3: &[f64], af4: &[f64], config: &EogConfig) -> Result<Vec<EyeCommand>, EogError> {
    run_detector(af3, af4, config, |a, b| a + b, PeakPicker::vertical(config))
}
