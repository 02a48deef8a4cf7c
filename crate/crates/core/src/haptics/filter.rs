use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("low-pass cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) for {sample_hz} Hz sampling")]
pub struct FilterError {
    pub cutoff_hz: f64,
    pub sample_hz: f64,
    pub nyquist: f64,
}

/// First-order IIR low-pass: `y ← y + α(x − y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassFilter {
    cutoff_hz: f64,
    sample_hz: f64,
    alpha: f64,
    state: Vec<f64>,
}

/// Smoothing factor `α = dt / (τ + dt)` with `τ = 1 / (2π f_c)`.
pub fn lowpass_alpha(cutoff_hz: f64, sample_hz: f64) -> f64 {
    let dt = 1.0 / sample_hz;
    let tau = 1.0 / (2.0 * PI * cutoff_hz);
    dt / (tau + dt)
}

impl LowPassFilter {
    /// Filter over `dim` channels starting from a zero state.
    pub fn new(cutoff_hz: f64, sample_hz: f64, dim: usize) -> Result<Self, FilterError> {
        Self::with_state(cutoff_hz, sample_hz, vec![0.0; dim])
    }

    pub fn with_state(cutoff_hz: f64, sample_hz: f64, state: Vec<f64>) -> Result<Self, FilterError> {
        let nyquist = sample_hz / 2.0;
        if !(cutoff_hz > 0.0 && cutoff_hz < nyquist && sample_hz.is_finite()) {
            return Err(FilterError {
                cutoff_hz,
                sample_hz,
                nyquist,
            });
        }
        Ok(Self {
            cutoff_hz,
            sample_hz,
            alpha: lowpass_alpha(cutoff_hz, sample_hz),
            state,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_hz(&self) -> f64 {
        self.sample_hz
    }

    pub fn output(&self) -> &[f64] {
        &self.state
    }

    pub fn reset(&mut self, value: &[f64]) {
        self.state.clear();
        self.state.extend_from_slice(value);
    }

    /// Feeds one sample. Panics if `sample` does not match the filter width.
    pub fn step(&mut self, sample: &[f64]) -> &[f64] {
        assert_eq!(sample.len(), self.state.len(), "filter width mismatch");
        for (y, x) in self.state.iter_mut().zip(sample) {
            *y += self.alpha * (x - *y);
        }
        &self.state
    }
}
