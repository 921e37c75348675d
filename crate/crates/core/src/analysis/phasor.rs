use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use super::AnalysisError;

/// `round(1 / (f0·dt))`, the number of samples in one fundamental period.
pub fn samples_per_period(f0: f64, dt: f64) -> Result<usize, AnalysisError> {
    let n = (1.0 / (f0 * dt)).round();
    if !(n.is_finite() && n >= 2.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "f0={f0} Hz with dt={dt} s gives fewer than 2 samples per period"
        )));
    }
    Ok(n as usize)
}

pub fn rms(window: &[f64]) -> Result<f64, AnalysisError> {
    if window.len() < 2 {
        return Err(AnalysisError::WindowTooShort {
            needed: 2,
            got: window.len(),
        });
    }
    let sum_sq: f64 = window.iter().map(|x| x * x).sum();
    Ok((sum_sq / window.len() as f64).sqrt())
}

/// Single-bin DFT of the first `n·k` samples at harmonic `h`, where `n` is
/// `samples_per_period` and `k` the number of whole periods used.
fn project(window: &[f64], bin: usize, len: usize) -> Complex64 {
    let w = -2.0 * PI * bin as f64 / len as f64;
    let acc = window[..len]
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (k, &x)| {
            let (s, c) = (w * k as f64).sin_cos();
            acc + Complex64::new(x * c, x * s)
        });
    acc * (SQRT_2 / len as f64)
}

/// Fundamental phasor (RMS convention) over exactly one period starting at
/// the first sample; the angle is relative to the window start.
pub fn fundamental_phasor(window: &[f64], f0: f64, dt: f64) -> Result<Complex64, AnalysisError> {
    let n = samples_per_period(f0, dt)?;
    harmonic_phasor(window, 1, n)
}

/// Phasor of harmonic `h` over one period of `n` samples.
pub fn harmonic_phasor(window: &[f64], h: usize, n: usize) -> Result<Complex64, AnalysisError> {
    if window.len() < n {
        return Err(AnalysisError::WindowTooShort {
            needed: n,
            got: window.len(),
        });
    }
    Ok(project(window, h, n))
}

pub(crate) fn project_periods(window: &[f64], h: usize, n: usize, periods: usize) -> Complex64 {
    project(window, h * periods, n * periods)
}

pub fn per_unit(series: &[f64], base: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(base.is_finite() && base > 0.0) {
        return Err(AnalysisError::InvalidBase(base));
    }
    Ok(series.iter().map(|x| x / base).collect())
}

/// One-period fundamental phasor evaluated on every window of a sampled
/// series, with the twiddle factors computed once.
#[derive(Debug, Clone)]
pub struct SlidingPhasor {
    twiddles: Vec<Complex64>,
}

impl SlidingPhasor {
    pub fn new(samples_per_period: usize) -> Self {
        let n = samples_per_period;
        let twiddles = (0..n)
            .map(|k| {
                let (s, c) = (-2.0 * PI * k as f64 / n as f64).sin_cos();
                Complex64::new(c, s) * (SQRT_2 / n as f64)
            })
            .collect();
        Self { twiddles }
    }

    pub fn len(&self) -> usize {
        self.twiddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twiddles.is_empty()
    }

    /// Phasor of `window[..n]`. The caller guarantees at least `n` samples.
    pub fn phasor(&self, window: &[f64]) -> Complex64 {
        self.twiddles
            .iter()
            .zip(window)
            .fold(Complex64::new(0.0, 0.0), |acc, (w, &x)| acc + w * x)
    }

    /// Phasor of every full window; element `i` covers samples
    /// `i ..= i + n - 1`.
    pub fn series(&self, samples: &[f64]) -> Vec<Complex64> {
        let n = self.len();
        if samples.len() < n {
            return Vec::new();
        }
        (0..=samples.len() - n).map(|i| self.phasor(&samples[i..])).collect()
    }
}
