use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::pll::{pll_step, PllGains, PllState};
use super::{signal, ControllerError};
use crate::analysis::{symmetrical_components, PhasorTriple, SlidingPhasor};
use crate::components::saturate_dq;
use crate::sim::{ControlFrame, Controller, Reply, SignalFrame, SimError};

/// Ride-through behaviour. Gains and limits in p.u. of rated current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LvrtConfig {
    /// Positive-sequence voltage below which the unit rides through (p.u.).
    pub threshold: f64,
    /// Reactive current per p.u. of voltage deviation.
    pub k_gain: f64,
    /// Magnitude limit of the dq reference (p.u.).
    pub current_limit: f64,
    /// Proportional DC-link voltage correction of the active power
    /// reference, p.u. power per p.u. voltage error.
    pub dc_gain: f64,
    /// Maximum rise rate of the active current reference (p.u./s); sets
    /// the ramp back after the fault clears.
    pub slew: f64,
    pub pll: PllGains,
}

impl Default for LvrtConfig {
    fn default() -> Self {
        Self {
            threshold: 0.9,
            k_gain: 2.0,
            current_limit: 1.2,
            dc_gain: 5.0,
            slew: 200.0,
            pll: PllGains::default(),
        }
    }
}

impl LvrtConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: &str| Err(ControllerError::InvalidConfig(m.to_string()));
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return bad("lvrt threshold must lie in (0, 1]");
        }
        if !(self.k_gain >= 0.0 && self.k_gain.is_finite()) {
            return bad("k_gain must be >= 0");
        }
        if !(self.current_limit > 0.0 && self.current_limit.is_finite()) {
            return bad("current_limit must be > 0");
        }
        if !(self.slew > 0.0 && self.dc_gain >= 0.0) {
            return bad("slew must be > 0 and dc_gain >= 0");
        }
        Ok(())
    }
}

/// Plant constants the controller is parametrized with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvrtPlant {
    pub u_rms_nominal: f64,
    pub f0: f64,
    pub rated_power: f64,
    pub v_mpp: f64,
    /// Grid angle at `t = 0`; the PLL starts locked to it.
    pub initial_angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LvrtMode {
    Normal,
    RideThrough,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvrtState {
    pub mode: LvrtMode,
    /// Active current reference when the latest dip was detected.
    pub pre_fault_i_d: f64,
    /// Last emitted references `(i_d, i_q)`.
    pub i_dq: (f64, f64),
}

impl LvrtState {
    pub fn new(i_dq: (f64, f64)) -> Self {
        Self {
            mode: LvrtMode::Normal,
            pre_fault_i_d: i_dq.0,
            i_dq,
        }
    }
}

/// Per-sample quantities the current reference is computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvrtInputs {
    /// Positive-sequence voltage magnitude (p.u.).
    pub v_pos: f64,
    /// PV power as a fraction of rated power.
    pub p_pv_pu: f64,
    /// DC-link voltage error `(v_dc − v_mpp) / v_mpp`.
    pub v_dc_err: f64,
}

/// Current references for one sample.
///
/// Normal: `i_d` follows the available power (PV power plus DC-link
/// correction) over the voltage, rising no faster than the slew rate;
/// `i_q = 0`. Ride-through: `i_q = k·(1 − v_pos)` capacitive, capped at the
/// limit, with `i_d` reduced to the remaining magnitude.
pub fn lvrt_step(inputs: &LvrtInputs, state: &mut LvrtState, cfg: &LvrtConfig, dt: f64) -> (f64, f64) {
    let limit = cfg.current_limit;
    let p_ref = inputs.p_pv_pu + cfg.dc_gain * inputs.v_dc_err;
    let i_d_target = (p_ref / inputs.v_pos.max(0.05)).clamp(0.0, limit);
    let riding = inputs.v_pos < cfg.threshold;
    if riding && state.mode == LvrtMode::Normal {
        state.pre_fault_i_d = state.i_dq.0;
    }
    let out = if riding {
        state.mode = LvrtMode::RideThrough;
        let i_q = (cfg.k_gain * (1.0 - inputs.v_pos)).clamp(0.0, limit);
        let room = (limit * limit - i_q * i_q).max(0.0).sqrt();
        (i_d_target.min(room), i_q)
    } else {
        state.mode = LvrtMode::Normal;
        let ramped = state.i_dq.0 + cfg.slew * dt;
        (i_d_target.min(ramped), 0.0)
    };
    state.i_dq = saturate_dq(out.0, out.1, limit);
    state.i_dq
}

/// In-process LVRT controller: PLL, one-period positive-sequence voltage
/// estimate and the ride-through logic, run every tick.
#[derive(Debug, Clone)]
pub struct LvrtController {
    cfg: LvrtConfig,
    plant: LvrtPlant,
    dt: f64,
    pll: PllState,
    state: LvrtState,
    dft: SlidingPhasor,
    window: [VecDeque<f64>; 3],
}

impl LvrtController {
    pub fn new(cfg: LvrtConfig, plant: LvrtPlant, dt: f64, initial_i_dq: (f64, f64)) -> Result<Self, ControllerError> {
        cfg.validate()?;
        let n = crate::analysis::samples_per_period(plant.f0, dt)
            .map_err(|e| ControllerError::InvalidConfig(e.to_string()))?;
        let mut pll_gains = cfg.pll;
        pll_gains.f0 = plant.f0;
        Ok(Self {
            cfg: LvrtConfig { pll: pll_gains, ..cfg },
            plant,
            dt,
            pll: PllState::locked(plant.initial_angle, plant.f0),
            state: LvrtState::new(initial_i_dq),
            dft: SlidingPhasor::new(n),
            window: Default::default(),
        })
    }

    pub fn state(&self) -> &LvrtState {
        &self.state
    }

    /// Positive-sequence voltage over the last period, or nominal while the
    /// window is still filling (the plant starts in steady state).
    fn v_pos(&mut self, u: [f64; 3]) -> f64 {
        let n = self.dft.len();
        for (w, x) in self.window.iter_mut().zip(u) {
            w.push_back(x);
            if w.len() > n {
                w.pop_front();
            }
        }
        if self.window[0].len() < n {
            return 1.0;
        }
        let ph: Vec<_> = self
            .window
            .iter_mut()
            .map(|w| self.dft.phasor(w.make_contiguous()))
            .collect();
        let seq = symmetrical_components(&PhasorTriple::new(ph[0], ph[1], ph[2]));
        seq.positive.norm() / self.plant.u_rms_nominal
    }
}

impl Controller for LvrtController {
    fn name(&self) -> &str {
        "lvrt"
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        let u = [signal(meas, "U_L1")?, signal(meas, "U_L2")?, signal(meas, "U_L3")?];
        let v_dc = signal(meas, "V_dc")?;
        let p_pv = signal(meas, "P_pv")?;
        let v_pos = self.v_pos(u);
        self.pll = pll_step(u, &self.pll, &self.cfg.pll, self.dt);
        let inputs = LvrtInputs {
            v_pos,
            p_pv_pu: p_pv / self.plant.rated_power,
            v_dc_err: (v_dc - self.plant.v_mpp) / self.plant.v_mpp,
        };
        let (i_d, i_q) = lvrt_step(&inputs, &mut self.state, &self.cfg, self.dt);
        let mode = match self.state.mode {
            LvrtMode::Normal => 0.0,
            LvrtMode::RideThrough => 1.0,
        };
        Ok(Reply::Fresh(
            ControlFrame::new(meas.tick)
                .with("i_d_ref_pu", i_d)
                .with("i_q_ref_pu", i_q)
                .with("pll_angle", self.pll.angle)
                .with("pll_omega", self.pll.omega)
                .with("status.mode", mode)
                .with("status.v_pos_pu", v_pos),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(v_pos: f64) -> LvrtInputs {
        LvrtInputs {
            v_pos,
            p_pv_pu: 1.0,
            v_dc_err: 0.0,
        }
    }

    #[test]
    fn nominal_voltage_is_normal() {
        let cfg = LvrtConfig::default();
        let mut st = LvrtState::new((1.0, 0.0));
        let (d, q) = lvrt_step(&inputs(1.0), &mut st, &cfg, 5e-5);
        assert_eq!(st.mode, LvrtMode::Normal);
        assert_eq!((d, q), (1.0, 0.0));
    }

    #[test]
    fn deep_dip_saturates() {
        let cfg = LvrtConfig::default();
        let mut st = LvrtState::new((1.0, 0.0));
        let (d, q) = lvrt_step(&inputs(0.05), &mut st, &cfg, 5e-5);
        assert_eq!(st.mode, LvrtMode::RideThrough);
        assert!((d.hypot(q) - 1.2).abs() < 1e-12);
        assert_eq!(q, 1.2);
        assert_eq!(st.pre_fault_i_d, 1.0);
    }

    #[test]
    fn shallow_dip_formula() {
        let cfg = LvrtConfig::default();
        let mut st = LvrtState::new((1.0, 0.0));
        let (d, q) = lvrt_step(&inputs(0.85), &mut st, &cfg, 5e-5);
        assert!((q - 0.30).abs() < 1e-12);
        assert!(d <= (1.44f64 - 0.09).sqrt() + 1e-12);
    }

    #[test]
    fn recovery_ramps_at_slew() {
        let cfg = LvrtConfig::default();
        let mut st = LvrtState::new((1.0, 0.0));
        lvrt_step(&inputs(0.05), &mut st, &cfg, 1e-3);
        let (d0, _) = st.i_dq;
        let (d1, q1) = lvrt_step(&inputs(1.0), &mut st, &cfg, 1e-3);
        assert_eq!(q1, 0.0);
        assert!((d1 - (d0 + 0.2)).abs() < 1e-12);
    }
}
