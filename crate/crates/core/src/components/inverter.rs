use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::{invalid, ComponentError, PHASE_SHIFT};

/// Average model of the three-phase bridge: a controlled current source
/// that follows its dq reference through a first-order lag.
///
/// Currents are in p.u. of the rated RMS phase current. The dq frame is
/// aligned with the sine-convention phase voltage: `d` is in phase with
/// `U_L1`, positive `q` leads it by 90° (capacitive injection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverterAvg {
    /// Rated apparent power (VA), three-phase.
    pub rated_power: f64,
    /// Rated line-to-neutral RMS voltage (V).
    pub u_rms_rated: f64,
    /// Magnitude limit of the dq current (p.u.).
    pub current_limit: f64,
    /// Current-tracking bandwidth (rad/s).
    pub bandwidth: f64,
    #[serde(skip)]
    state: (f64, f64),
}

impl Default for InverterAvg {
    fn default() -> Self {
        Self {
            rated_power: 10_000.0,
            u_rms_rated: 230.0,
            current_limit: 1.2,
            bandwidth: 2000.0,
            state: (0.0, 0.0),
        }
    }
}

impl InverterAvg {
    pub fn validate(&self) -> Result<(), ComponentError> {
        if !(self.rated_power > 0.0 && self.rated_power.is_finite()) {
            return Err(invalid("rated_power", "must be > 0"));
        }
        if !(self.u_rms_rated > 0.0 && self.u_rms_rated.is_finite()) {
            return Err(invalid("u_rms_rated", "must be > 0"));
        }
        if !(self.current_limit > 0.0 && self.current_limit.is_finite()) {
            return Err(invalid("current_limit", "must be > 0"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid("bandwidth", "must be > 0"));
        }
        Ok(())
    }

    /// Rated RMS phase current (A).
    pub fn rated_current(&self) -> f64 {
        self.rated_power / (3.0 * self.u_rms_rated)
    }

    /// Present dq current (p.u.).
    pub fn current_dq(&self) -> (f64, f64) {
        self.state
    }

    /// Start from a settled operating point.
    pub fn set_current_dq(&mut self, dq: (f64, f64)) {
        self.state = saturate_dq(dq.0, dq.1, self.current_limit);
    }

    /// Advance the current loop one step and return the phase currents (A)
    /// at `grid_angle`.
    pub fn inverter_output(&mut self, i_ref_dq: (f64, f64), grid_angle: f64, dt: f64) -> [f64; 3] {
        let (rd, rq) = saturate_dq(i_ref_dq.0, i_ref_dq.1, self.current_limit);
        let alpha = -(-self.bandwidth * dt).exp_m1();
        let (d, q) = self.state;
        let next = (d + alpha * (rd - d), q + alpha * (rq - q));
        self.state = saturate_dq(next.0, next.1, self.current_limit);
        self.phase_currents(grid_angle)
    }

    /// Phase currents (A) of the present state at `grid_angle`.
    pub fn phase_currents(&self, grid_angle: f64) -> [f64; 3] {
        let (d, q) = self.state;
        let scale = SQRT_2 * self.rated_current();
        inverse_park(d, q, grid_angle).map(|x| x * scale)
    }
}

/// Scale `(d, q)` onto the disc of radius `limit` if it lies outside.
pub fn saturate_dq(d: f64, q: f64, limit: f64) -> (f64, f64) {
    let mag = d.hypot(q);
    if mag > limit {
        let s = limit / mag;
        (d * s, q * s)
    } else {
        (d, q)
    }
}

/// Amplitude-invariant dq → abc under the sine phase convention.
pub fn inverse_park(d: f64, q: f64, angle: f64) -> [f64; 3] {
    std::array::from_fn(|k| {
        let (s, c) = (angle - k as f64 * PHASE_SHIFT).sin_cos();
        d * s + q * c
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(inv: &mut InverterAvg, r: (f64, f64), steps: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for _ in 0..steps {
            out = inv.inverter_output(r, 0.3, 5e-5);
        }
        out
    }

    #[test]
    fn zero_reference_decays() {
        let mut inv = InverterAvg::default();
        inv.set_current_dq((1.0, 0.5));
        let out = run(&mut inv, (0.0, 0.0), 20_000);
        assert!(out.iter().all(|i| i.abs() < 1e-9));
    }

    #[test]
    fn rated_reference_gives_balanced_rated_set() {
        let mut inv = InverterAvg::default();
        run(&mut inv, (1.0, 0.0), 20_000);
        let peak = SQRT_2 * inv.rated_current();
        for k in 0..40 {
            let angle = k as f64 * 0.157;
            let i = inv.phase_currents(angle);
            assert!((i.iter().sum::<f64>()).abs() < 1e-9);
            let expect = peak * angle.sin();
            assert!((i[0] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn magnitude_saturates_at_limit() {
        let mut inv = InverterAvg::default();
        run(&mut inv, (0.9, 1.2), 20_000);
        let (d, q) = inv.current_dq();
        assert!((d.hypot(q) - 1.2).abs() < 1e-12);
        assert!((q / d - 1.2 / 0.9).abs() < 1e-9);
    }

    #[test]
    fn saturation_is_identity_inside_disc() {
        assert_eq!(saturate_dq(0.3, -0.4, 1.2), (0.3, -0.4));
        let (d, q) = saturate_dq(3.0, 4.0, 1.0);
        assert!((d - 0.6).abs() < 1e-15 && (q - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rated_current_from_power() {
        let inv = InverterAvg::default();
        assert!((inv.rated_current() - 10_000.0 / 690.0).abs() < 1e-12);
    }
}
