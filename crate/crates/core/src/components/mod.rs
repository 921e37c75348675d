//! Electrical component library: the building blocks a test plant is
//! assembled from.

mod dclink;
mod feeder;
mod grid;
mod inverter;
mod pv;
mod rlc;
mod transformer;

pub use dclink::{dclink_step, DcLinkState};
pub use feeder::{DgUnit, FeederBus, FeederLine, FeederModel, RadialTopology};
pub use grid::{grid_voltage, GridSource, PHASE_SHIFT};
pub use inverter::{inverse_park, saturate_dq, InverterAvg};
pub use pv::{pv_current, PvArrayParams, PvCurve};
pub use rlc::{rlc_total_load, FixedBank, RlcLoadBank};
pub use transformer::{tap_ratio, TapTransformer};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComponentError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite state in {0}")]
    NumericalDivergence(&'static str),
    #[error("invalid feeder topology: {0}")]
    InvalidTopology(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ComponentError {
    ComponentError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
