/// Result of batch baseline removal.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutput {
    pub samples: Vec<f64>,
    /// Set when the stream held fewer than `tau` samples; nothing is emitted then.
    pub truncated: bool,
}

/// Subtracts the mean of the first `tau` samples from the whole channel.
pub fn remove_baseline(channel: &[f64], tau: usize) -> BaselineOutput {
    let mut remover = BaselineRemover::new(tau);
    let mut samples = Vec::with_capacity(channel.len());
    for &x in channel {
        samples.extend(remover.push(x));
    }
    BaselineOutput {
        truncated: !remover.is_ready() && !channel.is_empty(),
        samples,
    }
}

/// Streaming baseline removal: buffers the first `tau` samples, then freezes
/// their mean and releases everything centred on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRemover {
    tau: usize,
    pending: Vec<f64>,
    baseline: Option<f64>,
}

impl BaselineRemover {
    pub fn new(tau: usize) -> Self {
        Self {
            tau: tau.max(1),
            pending: Vec::with_capacity(tau),
            baseline: None,
        }
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub fn is_ready(&self) -> bool {
        self.baseline.is_some()
    }

    /// Feeds one sample; returns the samples that became computable.
    pub fn push(&mut self, x: f64) -> Vec<f64> {
        match self.baseline {
            Some(mean) => vec![x - mean],
            None => {
                self.pending.push(x);
                if self.pending.len() < self.tau {
                    return Vec::new();
                }
                let mean = self.pending.iter().sum::<f64>() / self.tau as f64;
                self.baseline = Some(mean);
                std::mem::take(&mut self.pending).into_iter().map(|v| v - mean).collect()
            }
        }
    }

    /// Samples still held back because the baseline is not yet known.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_offset_removed() {
        let out = remove_baseline(&vec![4200.0; 1000], 640);
        assert!(!out.truncated);
        assert_eq!(out.samples.len(), 1000);
        assert!(out.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pulse_after_baseline_survives_exactly() {
        let tau = 640;
        let pulse: Vec<f64> = (0..1200)
            .map(|k| if (800..900).contains(&k) { 150.0 * ((k - 800) as f64 / 100.0 * std::f64::consts::PI).sin() } else { 0.0 })
            .collect();
        let input: Vec<f64> = pulse.iter().map(|p| p + 300.0).collect();
        let out = remove_baseline(&input, tau);
        for (got, want) in out.samples.iter().zip(&pulse) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let out = remove_baseline(&[0.0; 700], 640);
        assert!(out.samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn short_stream_is_truncated() {
        let out = remove_baseline(&[1.0; 100], 640);
        assert!(out.truncated);
        assert!(out.samples.is_empty());
        assert!(!remove_baseline(&[], 640).truncated);
    }
}
