//! Analytic signal via the frequency-domain Hilbert transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::MIN_SAMPLES;
use crate::error::{Error, Result};

/// Forward and inverse plans for one length.
type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Reusable transformer; keeps FFT plans for the lengths it has seen.
pub struct HilbertTransformer {
    planner: FftPlanner<f64>,
    cached: Option<(usize, Plans)>,
}

impl Default for HilbertTransformer {
    fn default() -> Self {
        Self::new()
    }
}

impl HilbertTransformer {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            cached: None,
        }
    }

    fn plans(&mut self, n: usize) -> Plans {
        match &self.cached {
            Some((len, plans)) if *len == n => plans.clone(),
            _ => {
                let plans = (self.planner.plan_fft_forward(n), self.planner.plan_fft_inverse(n));
                self.cached = Some((n, plans.clone()));
                plans
            }
        }
    }

    /// Zeroes negative frequencies and doubles positive ones.
    pub fn analytic_signal(&mut self, x: &[f64]) -> Result<Vec<Complex64>> {
        let n = x.len();
        if n < MIN_SAMPLES {
            return Err(Error::Shape(format!("need at least {MIN_SAMPLES} samples, got {n}")));
        }
        let (fwd, inv) = self.plans(n);
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        let half = n / 2;
        for (k, v) in buf.iter_mut().enumerate().skip(1) {
            if k < half || (k == half && n % 2 == 1) {
                *v *= 2.0;
            } else if k > half {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        inv.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(buf)
    }

    pub fn phase(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.analytic_signal(x)?.into_iter().map(wrapped_arg).collect())
    }
}

/// Argument in (-π, π].
fn wrapped_arg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Instantaneous phase of `x` in (-π, π].
pub fn analytic_phase(x: &[f64]) -> Result<Vec<f64>> {
    HilbertTransformer::new().phase(x)
}

/// Magnitude of the analytic signal.
pub fn envelope(x: &[f64]) -> Result<Vec<f64>> {
    Ok(HilbertTransformer::new()
        .analytic_signal(x)?
        .into_iter()
        .map(|z| z.norm())
        .collect())
}

/// Removes 2π jumps from a wrapped phase sequence.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in phase {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
        prev = Some(p);
    }
    out
}
