//! Lockstep wire protocol between the rig and an out-of-process controller.
//!
//! Every frame is a 4-byte big-endian length followed by a UTF-8 JSON object
//! whose keys appear in the fixed order `kind, tick, t, payload`. Floats are
//! written in their shortest round-trip form, so decoding reproduces every
//! value bit for bit.
//!
//! Session flow, client to the left:
//!
//! ```text
//! hello {version}            ->
//!                            <- hello {controls, signals, version}
//!                            <- meas  tick n {signals...}
//! ctrl  tick n {controls...} ->
//!           ...
//!                            <- bye
//! ```

mod client;
mod delay;
mod server;
mod wire;

pub use client::{ClientSession, ServeSummary};
pub use delay::DelayChannel;
pub use server::{accept_controller, parse_endpoint, RemoteController, TimeoutAction, TimeoutPolicy};
pub use wire::{decode, encode, read_frame, write_frame, FrameKind, Value, WireFrame, MAX_FRAME_LEN};

use thiserror::Error;

/// Protocol version spoken by this build.
pub const PROTOCOL_VERSION: i64 = 1;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("protocol version mismatch: rig speaks {rig}, controller speaks {controller}")]
    VersionMismatch { rig: i64, controller: i64 },
    #[error("controller did not answer tick {tick} within {timeout_s} s")]
    ControllerTimeout { tick: u64, timeout_s: f64 },
    #[error("controller disconnected")]
    Disconnected,
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("non-finite value for `{0}` cannot be encoded")]
    NonFinite(String),
    #[error("invalid endpoint `{0}`")]
    InvalidEndpoint(String),
}
