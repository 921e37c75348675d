//! A stand-alone controller process. Start the rig with an external
//! binding first, then point this at it:
//!
//!     cargo run --release --bin chil-rig -- run crates/core/cases/cvcu.json --controller tcp:127.0.0.1:7700 --delay 0
//!     cargo run --release --example external_controller -- tcp:127.0.0.1:7700 cvcu
//!
//! The second argument picks the reference logic to serve (`cvcu`,
//! `rlctune`, `lvrt` or `echo`). The rig accepts one connection per run.

use chil_rig::controllers::EchoController;
use chil_rig::protocol::ClientSession;
use chil_rig::sim::Controller;
use chil_rig::testbench::{demo_case, parse_testcase, scenario_controller, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let endpoint = args.next().unwrap_or_else(|| "tcp:127.0.0.1:7700".into());
    let which = args.next().unwrap_or_else(|| "cvcu".into());
    let mut logic: Box<dyn Controller> = match Scenario::parse(&which) {
        Some(s) => scenario_controller(&parse_testcase(demo_case(s))?)?,
        None if which == "echo" => Box::new(EchoController),
        None => return Err(format!("unknown controller `{which}`").into()),
    };
    let mut session = ClientSession::connect_and_handshake(&endpoint)?;
    println!("connected to {} (protocol v{})", session.endpoint, session.version);
    println!(
        "rig offers {} signals, accepts {:?}",
        session.signals.len(),
        session.controls
    );
    let summary = session.serve_controller(&mut *logic)?;
    println!("served {} frames, last tick {:?}", summary.frames, summary.last_tick);
    Ok(())
}
