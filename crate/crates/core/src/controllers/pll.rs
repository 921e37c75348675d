use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Synchronous-reference-frame PLL state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PllState {
    /// Estimated angle of `U_L1` for the next sample, in `[0, 2π)`.
    pub angle: f64,
    /// Estimated angular frequency (rad/s).
    pub omega: f64,
    /// Loop-filter integrator (rad/s).
    pub integrator: f64,
}

impl PllState {
    pub fn locked(angle: f64, f0: f64) -> Self {
        Self {
            angle: angle.rem_euclid(TAU),
            omega: TAU * f0,
            integrator: 0.0,
        }
    }
}

/// PI loop filter gains. The phase detector output is normalized by the
/// input amplitude, so the loop dynamics do not change during a dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllGains {
    pub kp: f64,
    pub ki: f64,
    pub f0: f64,
}

impl Default for PllGains {
    /// Second-order loop with ωn = 2π·15 rad/s and ζ = 0.707.
    fn default() -> Self {
        let wn = 2.0 * PI * 15.0;
        Self {
            kp: 2.0 * 0.707 * wn,
            ki: wn * wn,
            f0: 50.0,
        }
    }
}

/// One PLL update with the phase voltages sampled at the time the state's
/// angle refers to. Returns the state for the next sample.
pub fn pll_step(v_abc: [f64; 3], state: &PllState, gains: &PllGains, dt: f64) -> PllState {
    let [a, b, c] = v_abc;
    // amplitude-invariant Clarke transform; with U_L1 = V·sin θ this gives
    // α = V·sin θ and β = −V·cos θ
    let alpha = (2.0 * a - b - c) / 3.0;
    let beta = (b - c) / 3f64.sqrt();
    let amplitude = alpha.hypot(beta);
    let (s, co) = state.angle.sin_cos();
    // sin(θ − θ̂)
    let err = if amplitude > 1e-9 {
        (alpha * co + beta * s) / amplitude
    } else {
        0.0
    };
    let w0 = TAU * gains.f0;
    let band = 0.1 * w0;
    let integrator = (state.integrator + gains.ki * err * dt).clamp(-band, band);
    let omega = (w0 + gains.kp * err + integrator).clamp(w0 - band, w0 + band);
    PllState {
        angle: (state.angle + omega * dt).rem_euclid(TAU),
        omega,
        integrator,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap_err(a: f64, b: f64) -> f64 {
        (a - b + PI).rem_euclid(TAU) - PI
    }

    fn balanced(theta: f64) -> [f64; 3] {
        std::array::from_fn(|k| 325.0 * (theta - k as f64 * TAU / 3.0).sin())
    }

    #[test]
    fn locks_within_five_periods() {
        let dt = 5e-5;
        let g = PllGains::default();
        let mut st = PllState::locked(1.0, 50.0);
        let n = (5.0 * 0.02 / dt) as usize;
        for k in 0..n {
            st = pll_step(balanced(TAU * 50.0 * k as f64 * dt), &st, &g, dt);
        }
        let truth = TAU * 50.0 * n as f64 * dt;
        assert!(wrap_err(st.angle, truth).abs() < 0.01);
    }

    #[test]
    fn relocks_after_frequency_step() {
        let dt = 5e-5;
        let g = PllGains::default();
        let mut st = PllState::locked(0.0, 50.0);
        let f = 50.5;
        let n = (10.0 * 0.02 / dt) as usize;
        for k in 0..n {
            st = pll_step(balanced(TAU * f * k as f64 * dt), &st, &g, dt);
        }
        let truth = TAU * f * n as f64 * dt;
        assert!(wrap_err(st.angle, truth).abs() < 0.01);
        assert!((st.omega - TAU * f).abs() < 0.05 * TAU);
    }

    #[test]
    fn zero_input_holds_nominal() {
        let g = PllGains::default();
        let st = pll_step([0.0; 3], &PllState::locked(6.2, 50.0), &g, 1e-4);
        assert_eq!(st.omega, TAU * 50.0);
        assert!(st.angle >= 0.0 && st.angle < TAU);
    }
}
