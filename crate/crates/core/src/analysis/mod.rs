//! Signal processing and compliance evaluation.
//!
//! All functions are pure. Phasors use the RMS magnitude convention: a sine
//! of amplitude `A` has a fundamental phasor of magnitude `A/√2`.

mod band;
mod phasor;
mod rise;
mod sequence;
mod thd;

pub use band::{band_check, Band, BandVerdict, Violation};
pub use phasor::{fundamental_phasor, harmonic_phasor, per_unit, rms, samples_per_period, SlidingPhasor};
pub use rise::rise_time;
pub use sequence::{inverse_symmetrical_components, symmetrical_components, PhasorTriple, SequenceSet};
pub use thd::thd;

pub use num_complex::Complex64;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window too short: need {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },
    #[error("harmonic {harmonic} is at or above Nyquist for {samples_per_period} samples per period")]
    NyquistViolation { harmonic: usize, samples_per_period: usize },
    #[error("empty series")]
    EmptySeries,
    #[error("threshold {threshold} never reached")]
    NeverReached { threshold: f64 },
    #[error("invalid per-unit base {0}")]
    InvalidBase(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
