//! Causal Butterworth low-pass built from cascaded second-order sections.
//!
//! Analog prototype poles sit on the unit circle at angles
//! `pi (2k + N + 1) / (2N)`; each conjugate pair becomes one biquad after the
//! pre-warped bilinear transform. Odd orders add one first-order section.

use std::f64::consts::PI;

use super::EogError;

/// Direct-form II transposed second-order section, normalized so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 2]) -> Self {
        Self { b, a, z1: 0.0, z2: 0.0 }
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.z1;
        self.z1 = self.b[1] * x - self.a[0] * y + self.z2;
        self.z2 = self.b[2] * x - self.a[1] * y;
        y
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    /// Complex response `H(e^{jw})` as `(re, im)`.
    fn response(&self, w: f64) -> (f64, f64) {
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, self.b[1] * s1 + self.b[2] * s2);
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, self.a[0] * s1 + self.a[1] * s2);
        let mag2 = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / mag2,
            (num.1 * den.0 - num.0 * den.1) / mag2,
        )
    }

    /// Poles strictly inside the unit circle (Jury conditions for a quadratic).
    fn is_stable(&self) -> bool {
        const MARGIN: f64 = 1e-9;
        let (a1, a2) = (self.a[0], self.a[1]);
        a1.is_finite() && a2.is_finite() && a2.abs() < 1.0 - MARGIN && a1.abs() < 1.0 + a2 - MARGIN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Biquad>,
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl Butterworth {
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, EogError> {
        if order == 0 {
            return Err(EogError::Config("filter order must be at least 1".into()));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(EogError::Config(format!(
                "cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
                sample_rate_hz / 2.0
            )));
        }
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let k2 = k * k;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        if order % 2 == 1 {
            let norm = 1.0 / (1.0 + k);
            sections.push(Biquad::new([k * norm, k * norm, 0.0], [(k - 1.0) * norm, 0.0]));
        }
        for pair in 0..order / 2 {
            let theta = PI * (2 * pair + 1) as f64 / (2 * order) as f64;
            // 1/Q of the conjugate pole pair.
            let inv_q = 2.0 * theta.sin();
            let norm = 1.0 / (1.0 + k * inv_q + k2);
            let b0 = k2 * norm;
            sections.push(Biquad::new(
                [b0, 2.0 * b0, b0],
                [2.0 * (k2 - 1.0) * norm, (1.0 - k * inv_q + k2) * norm],
            ));
        }
        if let Some(bad) = sections.iter().position(|s| !s.is_stable()) {
            return Err(EogError::Config(format!(
                "section {bad} is unstable for cutoff {cutoff_hz} Hz at {sample_rate_hz} Hz"
            )));
        }
        Ok(Self {
            sections,
            order,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.process(acc))
    }

    pub fn filter(&mut self, input: &[f64]) -> Vec<f64> {
        input.iter().map(|&x| self.process(x)).collect()
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    /// Magnitude `|H|` evaluated from the realized coefficients.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                re.hypot(im)
            })
            .product()
    }

    fn phase(&self, w: f64) -> f64 {
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                im.atan2(re)
            })
            .sum()
    }

    /// Group delay in samples at `freq_hz`, by central difference of the
    /// section phases.
    pub fn group_delay_samples(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let h = 1e-6;
        let lo = (w - h).max(0.0);
        let mut dphi = self.phase(w + h) - self.phase(lo);
        while dphi > PI {
            dphi -= 2.0 * PI;
        }
        while dphi < -PI {
            dphi += 2.0 * PI;
        }
        -dphi / (w + h - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Amplitude by quadrature projection over the settled second half.
    fn steady_state_gain(filter: &Butterworth, freq: f64) -> f64 {
        let mut f = filter.clone();
        f.reset();
        let fs = 128.0;
        let n = 128 * 40;
        let (mut s, mut c) = (0.0, 0.0);
        for k in 0..n {
            let phase = 2.0 * PI * freq * k as f64 / fs;
            let y = f.process(phase.sin());
            if k >= n / 2 {
                s += y * phase.sin();
                c += y * phase.cos();
            }
        }
        2.0 * s.hypot(c) / (n / 2) as f64
    }

    #[test]
    fn dc_gain_is_unity() {
        let mut f = Butterworth::lowpass(8, 4.0, 128.0).unwrap();
        let mut y = 0.0;
        for _ in 0..2000 {
            y = f.process(100.0);
        }
        assert!((y - 100.0).abs() < 0.1, "{y}");
        assert!((f.magnitude(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realized_response_matches_prewarped_butterworth() {
        // Bilinear Butterworth: |H|^2 = 1 / (1 + (tan(pi f/fs) / tan(pi fc/fs))^(2N)).
        let f = Butterworth::lowpass(8, 4.0, 128.0).unwrap();
        for freq in [0.5, 2.0, 4.0, 6.0, 8.0, 16.0] {
            let ratio = (PI * freq / 128.0).tan() / (PI * 4.0 / 128.0).tan();
            let expected = 1.0 / (1.0 + ratio.powi(16)).sqrt();
            assert!((f.magnitude(freq) - expected).abs() < 1e-9 * expected.max(1e-3), "{freq}");
        }
    }

    #[test]
    fn simulated_sinusoid_matches_magnitude() {
        let f = Butterworth::lowpass(8, 4.0, 128.0).unwrap();
        for freq in [1.0, 4.0, 8.0] {
            let sim = steady_state_gain(&f, freq);
            let ana = f.magnitude(freq);
            assert!((20.0 * (sim / ana).log10()).abs() < 0.05, "{freq}: {sim} vs {ana}");
        }
    }

    #[test]
    fn odd_order_has_first_order_section() {
        let f = Butterworth::lowpass(3, 4.0, 128.0).unwrap();
        assert_eq!(f.sections().len(), 2);
        assert!((f.magnitude(4.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn rejects_cutoff_at_or_near_nyquist() {
        assert!(Butterworth::lowpass(8, 64.0, 128.0).is_err());
        assert!(Butterworth::lowpass(8, 0.0, 128.0).is_err());
        assert!(Butterworth::lowpass(8, 63.9999999999, 128.0).is_err());
        assert!(Butterworth::lowpass(0, 4.0, 128.0).is_err());
    }

    #[test]
    fn group_delay_is_positive_at_dc() {
        let f = Butterworth::lowpass(8, 4.0, 128.0).unwrap();
        let gd = f.group_delay_samples(0.0);
        // A reference design evaluated independently gives 26.02 samples.
        assert!((gd - 26.02).abs() < 0.05, "{gd}");
    }
}
