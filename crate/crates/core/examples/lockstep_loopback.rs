//! Route the reference voltage controller through the wire protocol over
//! a loopback socket and check that the trace matches the direct run.
//!
//!     cargo run --release --example lockstep_loopback

use std::net::TcpListener;
use std::thread;

use chil_rig::protocol::ClientSession;
use chil_rig::testbench::{
    apply_overrides, demo_case, parse_testcase, run_case, run_case_with_listener, scenario_controller, RunOptions,
    Scenario,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut direct = parse_testcase(demo_case(Scenario::Cvcu))?;
    apply_overrides(&mut direct, None, None, Some(0.0))?;
    let reference = run_case(&direct, RunOptions::default())?;

    let listener = TcpListener::bind("127.0.0.1:0")?;
    let endpoint = format!("tcp:{}", listener.local_addr()?);
    let mut routed_case = direct.clone();
    apply_overrides(&mut routed_case, Some(&endpoint), None, None)?;

    let logic_case = routed_case.clone();
    let client = thread::spawn(move || -> Result<u64, String> {
        let mut session = ClientSession::connect_and_handshake(&endpoint).map_err(|e| e.to_string())?;
        let mut logic = scenario_controller(&logic_case).map_err(|e| e.to_string())?;
        Ok(session.serve_controller(&mut *logic).map_err(|e| e.to_string())?.frames)
    });
    let routed = run_case_with_listener(&routed_case, RunOptions::default(), Some(&listener))?;
    let frames = client.join().expect("client thread")?;

    let same = reference.traces[0].1.to_csv() == routed.traces[0].1.to_csv();
    println!("{frames} frames exchanged over {}", routed.report.controller);
    println!("trace identical to the in-process run: {same}");
    Ok(())
}
