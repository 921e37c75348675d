//! Reference controllers for the three scenarios.
//!
//! Each controller exists twice: as a pure step function over plain inputs
//! (`pll_step`, `lvrt_step`, `cvcu_step`, `rlc_tuner_step`) and as a
//! [`Controller`] adapter that reads named signals from a measurement frame
//! and writes named controls. The adapters are what the engine and the
//! protocol client drive.

mod cvcu;
mod lvrt;
mod pll;
mod tuner;

pub use cvcu::{cvcu_step, CvcuCommand, CvcuConfig, CvcuController, CvcuInputs, CvcuPlant, CvcuState};
pub use lvrt::{lvrt_step, LvrtConfig, LvrtController, LvrtInputs, LvrtMode, LvrtPlant, LvrtState};
pub use pll::{pll_step, PllGains, PllState};
pub use tuner::{rlc_tuner_step, RlcTuner, TunerAction, TunerConfig, TunerPhase, TunerPlant, TunerState};

use thiserror::Error;

use crate::sim::{ControlFrame, Controller, Reply, SignalFrame, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("measurement frame lacks signal `{0}`")]
    MissingSignal(String),
    #[error("tuning diverged after {steps} steps: {reason}")]
    TuningDiverged { steps: u32, reason: String },
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn signal(meas: &SignalFrame, name: &str) -> Result<f64, ControllerError> {
    meas.get(name)
        .ok_or_else(|| ControllerError::MissingSignal(name.to_string()))
}

/// Replies to every measurement with an empty control frame carrying the
/// measurement's tick. Useful to exercise the protocol without any plant
/// effect.
#[derive(Debug, Clone, Default)]
pub struct EchoController;

impl Controller for EchoController {
    fn name(&self) -> &str {
        "echo"
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        Ok(Reply::Fresh(ControlFrame::new(meas.tick)))
    }
}
