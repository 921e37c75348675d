use super::SimError;

/// Fixed-step simulation clock.
///
/// Time is always recomputed as `tick * dt`, never accumulated, so the value
/// reported for a tick is bit-identical across runs and independent of how
/// many steps were taken to get there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    tick: u64,
    dt: f64,
}

impl SimClock {
    pub fn new(dt: f64) -> Result<Self, SimError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::InvalidTimestep(dt));
        }
        Ok(Self { tick: 0, dt })
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self) -> f64 {
        self.time_at(self.tick)
    }

    pub fn time_at(&self, tick: u64) -> f64 {
        tick as f64 * self.dt
    }

    pub(crate) fn advance(&mut self) {
        self.tick += 1;
    }

    /// Number of ticks spanning `seconds`, if it is an integer multiple of `dt`.
    pub fn ticks_for(&self, seconds: f64) -> Option<u64> {
        ticks_for(seconds, self.dt)
    }
}

/// `seconds / dt` as an integer when the ratio is integral to within a
/// relative 1e-9; `None` otherwise or when negative.
pub fn ticks_for(seconds: f64, dt: f64) -> Option<u64> {
    if !(seconds.is_finite() && dt.is_finite() && dt > 0.0 && seconds >= 0.0) {
        return None;
    }
    let ratio = seconds / dt;
    let n = ratio.round();
    if (ratio - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as u64)
    } else {
        None
    }
}
