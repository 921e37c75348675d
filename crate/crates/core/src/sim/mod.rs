//! Fixed-timestep engine: clock, frames, events, traces, plant and run loop.

mod clock;
mod engine;
mod event;
mod frame;
mod network;
mod trace;

pub use clock::{ticks_for, SimClock};
pub use engine::{
    run, step, Controller, ControllerPort, ControllerSummary, EngineConfig, ExchangeRecord, Reply, ReplyKind, RunOutput,
};
pub use event::{schedule, Event, EventAction, EventQueue};
pub use frame::{ControlFrame, SignalFrame};
pub use network::{FeederStage, Network, PvChain, RlcStage};
pub use trace::{format_sig9, Trace, TraceRow};

use thiserror::Error;

use crate::components::ComponentError;
use crate::controllers::ControllerError;
use crate::loadflow::LoadFlowError;
use crate::protocol::ProtocolError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("timestep must be finite and > 0, got {0}")]
    InvalidTimestep(f64),
    #[error("event at t={fire_t} lies outside [0, {duration}]")]
    InvalidEvent { fire_t: f64, duration: f64 },
    #[error("trace shape: {0}")]
    TraceShape(String),
    #[error("numerical divergence at tick {tick}: {signal} = {value}")]
    NumericalDivergence { tick: u64, signal: String, value: f64 },
    #[error("unknown plant parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown control `{0}`")]
    UnknownControl(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Component(#[from] ComponentError),
    #[error(transparent)]
    LoadFlow(#[from] LoadFlowError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}
