use serde::{Deserialize, Serialize};

use super::{invalid, ComponentError};

/// One switchable fixed load of the bank, rated at nominal voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedBank {
    /// Active power at nominal voltage (W).
    pub p: f64,
    /// Net reactive power at nominal voltage (var); an RLC bank resonant at
    /// f0 has 0.
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub switched: bool,
}

/// Switchable RLC load bank: coarse fixed steps plus a continuously
/// adjustable conductance for fine tuning.
///
/// The fine element is expressed as a three-phase equivalent conductance
/// `g`, so it draws `g·U²` with `U` the line-to-neutral RMS voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlcLoadBank {
    pub banks: Vec<FixedBank>,
    pub fine_g: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// Line-to-neutral voltage at which bank ratings apply (V).
    pub v_nominal: f64,
}

impl Default for RlcLoadBank {
    fn default() -> Self {
        let banks = [4000.0, 2000.0, 1000.0, 500.0, 250.0]
            .into_iter()
            .map(|p| FixedBank {
                p,
                q: 0.0,
                switched: false,
            })
            .collect();
        Self {
            banks,
            fine_g: 0.0,
            g_min: 0.0,
            g_max: 0.02,
            v_nominal: 230.0,
        }
    }
}

impl RlcLoadBank {
    pub fn validate(&self) -> Result<(), ComponentError> {
        if self
            .banks
            .iter()
            .any(|b| !(b.p.is_finite() && b.p >= 0.0 && b.q.is_finite()))
        {
            return Err(invalid("banks", "powers must be finite, P >= 0"));
        }
        if !(self.g_min <= self.g_max && self.g_min >= 0.0 && self.g_max.is_finite()) {
            return Err(invalid("g_min", "need 0 <= g_min <= g_max"));
        }
        if !(self.fine_g >= self.g_min && self.fine_g <= self.g_max) {
            return Err(invalid("fine_g", "outside [g_min, g_max]"));
        }
        if !(self.v_nominal > 0.0 && self.v_nominal.is_finite()) {
            return Err(invalid("v_nominal", "must be > 0"));
        }
        Ok(())
    }

    pub fn set_fine_g(&mut self, g: f64) {
        self.fine_g = g.clamp(self.g_min, self.g_max);
    }

    pub fn set_switched(&mut self, bank: usize, on: bool) -> bool {
        match self.banks.get_mut(bank) {
            Some(b) => {
                b.switched = on;
                true
            }
            None => false,
        }
    }

    /// Power (W) the fine element can absorb at `v_rms`.
    pub fn fine_range(&self, v_rms: f64) -> (f64, f64) {
        (self.g_min * v_rms * v_rms, self.g_max * v_rms * v_rms)
    }

    pub fn total_load(&self, v_rms: f64) -> (f64, f64) {
        rlc_total_load(self, v_rms)
    }
}

pub fn rlc_total_load(bank: &RlcLoadBank, v_rms: f64) -> (f64, f64) {
    let scale = (v_rms / bank.v_nominal).powi(2);
    let (p, q) = bank
        .banks
        .iter()
        .filter(|b| b.switched)
        .fold((0.0, 0.0), |(p, q), b| (p + b.p, q + b.q));
    (p * scale + bank.fine_g * v_rms * v_rms, q * scale)
}
