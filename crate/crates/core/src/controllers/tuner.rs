use serde::{Deserialize, Serialize};

use super::{signal, ControllerError};
use crate::components::RlcLoadBank;
use crate::sim::{ControlFrame, Controller, Reply, SignalFrame, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerConfig {
    /// Leave the coarse phase once `|P_grid|` is at or below this (W).
    pub coarse_threshold: f64,
    /// Done band as a fraction of the reference power.
    pub tolerance: f64,
    /// Reference power for the done band (W); `None` uses the PV power of
    /// the plant at the start of the run.
    pub p_reference: Option<f64>,
    /// Consecutive fine steps with growing `|P_grid|` that count as
    /// divergence.
    pub diverge_steps: u32,
}

impl Default for TunerConfig {
    fn default() -> Self {
        Self {
            coarse_threshold: 600.0,
            tolerance: 0.03,
            p_reference: None,
            diverge_steps: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TunerPhase {
    Coarse,
    Fine,
    Done,
}

impl TunerPhase {
    pub fn code(self) -> f64 {
        match self {
            TunerPhase::Coarse => 0.0,
            TunerPhase::Fine => 1.0,
            TunerPhase::Done => 2.0,
        }
    }
}

/// Bank layout as seen by the tuner.
#[derive(Debug, Clone, PartialEq)]
pub struct TunerPlant {
    /// Bank powers at nominal voltage (W).
    pub banks: Vec<f64>,
    pub g_range: (f64, f64),
    pub v_nominal: f64,
    pub p_reference: f64,
}

impl TunerPlant {
    pub fn from_bank(bank: &RlcLoadBank, p_reference: f64) -> Self {
        Self {
            banks: bank.banks.iter().map(|b| b.p).collect(),
            g_range: (bank.g_min, bank.g_max),
            v_nominal: bank.v_nominal,
            p_reference,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TunerState {
    pub phase: TunerPhase,
    pub switched: Vec<bool>,
    pub fine_g: f64,
    /// Tuner invocations up to and including the one that reached Done.
    pub steps: u32,
    rising: u32,
    last_abs: Option<f64>,
}

impl TunerState {
    pub fn new(switched: Vec<bool>, fine_g: f64) -> Self {
        Self {
            phase: TunerPhase::Coarse,
            switched,
            fine_g,
            steps: 0,
            rising: 0,
            last_abs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TunerAction {
    SwitchIn(usize),
    SwitchOut(usize),
    Fine {
        g: f64,
    },
    Done,
    /// Already done; nothing to do.
    Idle,
}

/// One tuner decision from a full-period grid power measurement.
///
/// Coarse: switch in the largest unswitched bank that does not overshoot
/// the export (switch out for import). Fine: one proportional conductance
/// correction `ΔG = P_grid / v_rms²`. Done once `|P_grid|` is inside the
/// tolerance band.
pub fn rlc_tuner_step(
    p_grid: f64,
    v_rms: f64,
    state: &mut TunerState,
    cfg: &TunerConfig,
    plant: &TunerPlant,
) -> Result<TunerAction, ControllerError> {
    if state.phase == TunerPhase::Done {
        return Ok(TunerAction::Idle);
    }
    state.steps += 1;
    let abs = p_grid.abs();
    if abs <= cfg.tolerance * plant.p_reference {
        state.phase = TunerPhase::Done;
        return Ok(TunerAction::Done);
    }
    if state.phase == TunerPhase::Coarse {
        if abs > cfg.coarse_threshold {
            let scale = (v_rms / plant.v_nominal).powi(2);
            let fits = |k: &usize| plant.banks[*k] * scale <= abs;
            let by_size = |a: &usize, b: &usize| plant.banks[*a].total_cmp(&plant.banks[*b]).then(b.cmp(a));
            let pick = (0..plant.banks.len())
                .filter(|k| state.switched[*k] == (p_grid < 0.0))
                .filter(fits)
                .max_by(by_size);
            if let Some(k) = pick {
                state.switched[k] = p_grid > 0.0;
                return Ok(if p_grid > 0.0 {
                    TunerAction::SwitchIn(k)
                } else {
                    TunerAction::SwitchOut(k)
                });
            }
        }
        state.phase = TunerPhase::Fine;
    }

    if let Some(last) = state.last_abs {
        state.rising = if abs > last { state.rising + 1 } else { 0 };
    }
    state.last_abs = Some(abs);
    if state.rising >= cfg.diverge_steps {
        return Err(ControllerError::TuningDiverged {
            steps: state.steps,
            reason: format!("|P_grid| grew for {} consecutive fine steps", state.rising),
        });
    }
    if v_rms <= 0.0 {
        return Err(ControllerError::TuningDiverged {
            steps: state.steps,
            reason: "no grid voltage".into(),
        });
    }
    let (g_min, g_max) = plant.g_range;
    let g = (state.fine_g + p_grid / (v_rms * v_rms)).clamp(g_min, g_max);
    if g == state.fine_g {
        return Err(ControllerError::TuningDiverged {
            steps: state.steps,
            reason: format!("fine element saturated with {p_grid:.1} W left"),
        });
    }
    state.fine_g = g;
    Ok(TunerAction::Fine { g })
}

/// In-process RLC auto-tuner.
#[derive(Debug, Clone)]
pub struct RlcTuner {
    cfg: TunerConfig,
    plant: TunerPlant,
    state: TunerState,
}

impl RlcTuner {
    pub fn new(cfg: TunerConfig, bank: &RlcLoadBank, p_pv: f64) -> Result<Self, ControllerError> {
        let p_reference = cfg.p_reference.unwrap_or(p_pv);
        if !(p_reference >= 0.0 && cfg.tolerance > 0.0 && cfg.coarse_threshold >= 0.0) {
            return Err(ControllerError::InvalidConfig(
                "tuner needs p_reference >= 0, tolerance > 0 and coarse_threshold >= 0".into(),
            ));
        }
        Ok(Self {
            plant: TunerPlant::from_bank(bank, p_reference),
            state: TunerState::new(bank.banks.iter().map(|b| b.switched).collect(), bank.fine_g),
            cfg,
        })
    }

    pub fn state(&self) -> &TunerState {
        &self.state
    }
}

impl Controller for RlcTuner {
    fn name(&self) -> &str {
        "rlctune"
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        let p_grid = signal(meas, "P_grid")?;
        let v_rms = signal(meas, "V_rms")?;
        rlc_tuner_step(p_grid, v_rms, &mut self.state, &self.cfg, &self.plant)?;
        let mut frame = ControlFrame::new(meas.tick);
        for (k, on) in self.state.switched.iter().enumerate() {
            frame.set(format!("bank{k}_on"), if *on { 1.0 } else { 0.0 });
        }
        frame.set("g_fine", self.state.fine_g);
        frame.set("status.phase", self.state.phase.code());
        frame.set("status.step", self.state.steps as f64);
        frame.set("status.p_grid_seen", p_grid);
        Ok(Reply::Fresh(frame))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (TunerConfig, TunerPlant, TunerState) {
        let bank = RlcLoadBank::default();
        (
            TunerConfig::default(),
            TunerPlant::from_bank(&bank, 5800.0),
            TunerState::new(vec![false; 5], 0.0),
        )
    }

    #[test]
    fn first_switch_is_largest_fit() {
        let (cfg, plant, mut st) = setup();
        let a = rlc_tuner_step(5800.0, 230.0, &mut st, &cfg, &plant).unwrap();
        assert_eq!(a, TunerAction::SwitchIn(0));
    }

    #[test]
    fn coarse_threshold_moves_to_fine() {
        let (cfg, plant, mut st) = setup();
        let a = rlc_tuner_step(550.0, 230.0, &mut st, &cfg, &plant).unwrap();
        assert_eq!(st.phase, TunerPhase::Fine);
        assert!(matches!(a, TunerAction::Fine { .. }));
    }

    #[test]
    fn inside_tolerance_is_done() {
        let (cfg, plant, mut st) = setup();
        assert_eq!(
            rlc_tuner_step(100.0, 230.0, &mut st, &cfg, &plant).unwrap(),
            TunerAction::Done
        );
        assert_eq!(
            rlc_tuner_step(5000.0, 230.0, &mut st, &cfg, &plant).unwrap(),
            TunerAction::Idle
        );
    }

    #[test]
    fn import_switches_out() {
        let (cfg, plant, mut st) = setup();
        st.switched = vec![true, true, false, false, false];
        let a = rlc_tuner_step(-2100.0, 230.0, &mut st, &cfg, &plant).unwrap();
        assert_eq!(a, TunerAction::SwitchOut(1));
    }

    #[test]
    fn growing_error_diverges() {
        let (cfg, plant, mut st) = setup();
        st.phase = TunerPhase::Fine;
        let mut result = Ok(TunerAction::Idle);
        for k in 0..7 {
            result = rlc_tuner_step(300.0 + 10.0 * k as f64, 230.0, &mut st, &cfg, &plant);
            if result.is_err() {
                break;
            }
        }
        assert!(matches!(result, Err(ControllerError::TuningDiverged { .. })));
    }
}
