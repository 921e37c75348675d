//! Deterministic controller-in-the-loop (CHIL) test rig.
//!
//! The rig couples a fixed-timestep plant simulator with controllers that
//! run either in-process or behind a lockstep socket protocol, and turns the
//! recorded traces into pass/fail reports for three grid-integration test
//! scenarios:
//!
//! - **LVRT**: a PV inverter riding through a three-phase voltage dip, judged
//!   on its normalized positive-sequence current band.
//! - **CVCU**: coordinated voltage control of a radial MV feeder through an
//!   on-load tap changer and DG reactive power, with an optional delayed
//!   measurement path.
//! - **RLC tuning**: coarse/fine tuning of a switchable local load until the
//!   grid exchange of a PV inverter reaches zero.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`sim`] | clock, frames, events, traces, the plant [`sim::Network`] and the run loop |
//! | [`components`] | grid source, PV array, DC link, average inverter, tap transformer, load bank, feeder |
//! | [`analysis`] | RMS, phasors, symmetrical components, THD, band check, rise time |
//! | [`loadflow`] | backward/forward sweep for radial feeders |
//! | [`controllers`] | PLL, LVRT controller, CVCU, RLC tuner |
//! | [`protocol`] | length-prefixed JSON wire format, delay channel, lockstep endpoints |
//! | [`testbench`] | test case files, scenario runners, report generation |
//!
//! The `examples/` directory of this crate has one runnable program per
//! capability; `cargo run --example lvrt_compliance` is a good start.

// `!(x > 0.0)` is used on purpose so NaN fails every range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod components;
pub mod controllers;
pub mod loadflow;
pub mod protocol;
pub mod sim;
pub mod testbench;

/// Version string written into reports and protocol handshakes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
