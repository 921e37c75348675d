use serde::{Deserialize, Serialize};

use super::{invalid, ComponentError};

/// On-load tap changer with ratio `1 + tap·step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TapTransformer {
    pub tap: i64,
    pub tap_min: i64,
    pub tap_max: i64,
    /// Ratio change per tap (p.u.).
    pub step: f64,
}

impl Default for TapTransformer {
    fn default() -> Self {
        Self {
            tap: 0,
            tap_min: -8,
            tap_max: 8,
            step: 0.015,
        }
    }
}

impl TapTransformer {
    pub fn validate(&self) -> Result<(), ComponentError> {
        if self.tap_min > self.tap_max {
            return Err(invalid("tap_min", "must not exceed tap_max"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid("step", "must be > 0"));
        }
        if !(1.0 + self.tap_min as f64 * self.step > 0.0) {
            return Err(invalid("tap_min", "ratio must stay positive"));
        }
        Ok(())
    }

    pub fn clamped_tap(&self) -> i64 {
        self.tap.clamp(self.tap_min, self.tap_max)
    }

    pub fn set_tap(&mut self, tap: i64) {
        self.tap = tap.clamp(self.tap_min, self.tap_max);
    }

    /// Move by `delta` taps, clamped at the end stops. Returns the new tap.
    pub fn step_tap(&mut self, delta: i64) -> i64 {
        self.set_tap(self.clamped_tap().saturating_add(delta));
        self.tap
    }

    pub fn ratio(&self) -> f64 {
        tap_ratio(self)
    }
}

pub fn tap_ratio(xfmr: &TapTransformer) -> f64 {
    1.0 + xfmr.clamped_tap() as f64 * xfmr.step
}
