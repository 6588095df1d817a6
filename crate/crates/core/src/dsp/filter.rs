//! Zero-phase Butterworth band-pass.
//!
//! The filter is a 4th-order band-pass (2nd-order low-pass prototype under the
//! low-pass to band-pass transform) realised as two biquad sections after a
//! pre-warped bilinear transform. `filtfilt` runs it forward and backward over
//! an odd-reflected extension with steady-state initial conditions, so the
//! net phase response is zero and the magnitude response is squared.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum input length accepted by the band-limited operations.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Band {
    pub const ALPHA: Band = Band {
        low_hz: 8.0,
        high_hz: 12.0,
    };

    pub fn new(low_hz: f64, high_hz: f64) -> Self {
        Self { low_hz, high_hz }
    }

    pub fn validate(&self, rate_hz: f64) -> Result<()> {
        let nyquist = rate_hz / 2.0;
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::config(format!(
                "band {}-{} Hz must satisfy 0 < low < high < {nyquist} Hz",
                self.low_hz, self.high_hz
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.low_hz, self.high_hz)
    }
}

impl std::str::FromStr for Band {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once('-')
            .ok_or_else(|| format!("expected LOW-HIGH, got `{s}`"))?;
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad low edge `{lo}`"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad high edge `{hi}`"))?;
        Ok(Band::new(lo, hi))
    }
}

/// Direct-form II transposed biquad, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (1.0 + self.a[0] * z_inv + self.a[1] * z2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Steady-state state vector for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let y = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * y;
        let z1 = self.b[1] - self.a[0] * y + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + state[0];
            state[0] = b1 * input - a1 * y + state[1];
            state[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    sections: [Biquad; 2],
    band: Band,
    rate_hz: f64,
}

impl BandpassFilter {
    pub fn design(band: Band, rate_hz: f64) -> Result<Self> {
        band.validate(rate_hz)?;
        let fs2 = 2.0 * rate_hz;
        let w1 = fs2 * (PI * band.low_hz / rate_hz).tan();
        let w2 = fs2 * (PI * band.high_hz / rate_hz).tan();
        let w0_sq = w1 * w2;
        let bw = w2 - w1;

        // Second-order Butterworth prototype poles lie at angles 3π/4 and 5π/4;
        // one of the conjugate pair is enough since each maps to a pole pair.
        let proto = Complex64::from_polar(1.0, 3.0 * PI / 4.0);
        let pb = proto * bw;
        let disc = (pb * pb - 4.0 * w0_sq).sqrt();
        let analog = [(pb + disc) / 2.0, (pb - disc) / 2.0];

        let mut sections = [Biquad {
            b: [1.0, 0.0, -1.0],
            a: [0.0, 0.0],
        }; 2];
        for (section, s) in sections.iter_mut().zip(analog) {
            let z = (fs2 + s) / (fs2 - s);
            section.a = [-2.0 * z.re, z.norm_sqr()];
        }

        // Unit gain at the digital image of the analog centre frequency.
        let centre = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let z_inv = Complex64::from_polar(1.0, -centre);
        let gain: f64 = sections.iter().map(|s| s.response(z_inv)).product::<Complex64>().norm();
        for c in sections[0].b.iter_mut() {
            *c /= gain;
        }
        Ok(Self {
            sections,
            band,
            rate_hz,
        })
    }

    pub fn band(&self) -> Band {
        self.band
    }

    /// Single causal pass with zero initial state.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0, 0.0]);
        }
        y
    }

    /// Magnitude of the one-pass frequency response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / self.rate_hz);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex64>()
            .norm()
    }

    fn pad_len(&self, n: usize) -> usize {
        let periods = (3.0 * self.rate_hz / self.band.low_hz).ceil() as usize;
        periods.min(n.saturating_sub(1))
    }

    fn run_with_steady_state(&self, x: &mut [f64]) {
        let mut level = match x.first() {
            Some(&v) => v,
            None => return,
        };
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            s.run(x, [z1 * level, z2 * level]);
            level *= s.dc_gain();
        }
    }

    /// Zero-phase forward-backward filtering; output length equals input length.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() < MIN_SAMPLES {
            return Err(Error::Shape(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                x.len()
            )));
        }
        let n = x.len();
        let pad = self.pad_len(n);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (x[0], x[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

        self.run_with_steady_state(&mut ext);
        ext.reverse();
        self.run_with_steady_state(&mut ext);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase band-pass of `x`.
pub fn bandpass(x: &[f64], band: Band, rate_hz: f64) -> Result<Vec<f64>> {
    BandpassFilter::design(band, rate_hz)?.filtfilt(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, n: usize, rate: f64) -> Vec<f64> {
        (0..n).map(|k| (2.0 * PI * freq * k as f64 / rate).sin()).collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    fn correlation(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn passband_and_stopband_response() {
        let f = BandpassFilter::design(Band::ALPHA, 250.0).unwrap();
        let centre = (8.0f64 * 12.0).sqrt();
        assert!((f.magnitude(centre) - 1.0).abs() < 0.02);
        // Butterworth edges sit at -3 dB.
        assert!((f.magnitude(8.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02);
        assert!((f.magnitude(12.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02);
        assert!(f.magnitude(50.0) < 0.01);
        assert!(f.magnitude(1.0) < 0.05);
    }

    #[test]
    fn ten_hz_passes_with_high_correlation() {
        let x = sine(10.0, 250, 250.0);
        let y = bandpass(&x, Band::ALPHA, 250.0).unwrap();
        assert_eq!(y.len(), x.len());
        let trim = 25;
        let r = correlation(&x[trim..250 - trim], &y[trim..250 - trim]);
        assert!(r >= 0.99, "correlation {r}");
    }

    #[test]
    fn fifty_hz_is_attenuated() {
        let x = sine(50.0, 2500, 250.0);
        let y = bandpass(&x, Band::ALPHA, 250.0).unwrap();
        let ratio = rms(&y) / rms(&x);
        assert!(ratio <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn fifty_hz_is_attenuated_inside_a_trimmed_one_second_window() {
        // Untrimmed, the 1 s output is dominated by edge ringing (about 8% RMS).
        let x = sine(50.0, 250, 250.0);
        let y = bandpass(&x, Band::ALPHA, 250.0).unwrap();
        let ratio = rms(&y[25..225]) / rms(&x[25..225]);
        assert!(ratio <= 0.05, "ratio {ratio}");
    }

    #[test]
    fn zero_in_zero_out() {
        let y = bandpass(&[0.0; 64], Band::ALPHA, 250.0).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_phase_on_a_long_sinusoid() {
        let x = sine(10.0, 2500, 250.0);
        let y = bandpass(&x, Band::ALPHA, 250.0).unwrap();
        // Interior samples reproduce the input with no lag.
        let max_err = x[500..2000]
            .iter()
            .zip(&y[500..2000])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let gain = f64::powi(BandpassFilter::design(Band::ALPHA, 250.0).unwrap().magnitude(10.0), 2);
        assert!(max_err < 1.0 - gain + 1e-3, "max err {max_err}, gain {gain}");
    }

    #[test]
    fn invalid_bands_and_short_inputs() {
        assert!(matches!(bandpass(&[0.0; 32], Band::new(8.0, 130.0), 250.0), Err(Error::Config(_))));
        assert!(matches!(bandpass(&[0.0; 32], Band::new(12.0, 8.0), 250.0), Err(Error::Config(_))));
        assert!(matches!(bandpass(&[0.0; 8], Band::ALPHA, 250.0), Err(Error::Shape(_))));
    }

    #[test]
    fn band_parses_from_text() {
        assert_eq!("8-12".parse::<Band>().unwrap(), Band::ALPHA);
        assert!("8".parse::<Band>().is_err());
    }
}
