//! The voltage controller on the synthetic feeder, once with a healthy
//! measurement link and once with a 60 s delay. Prints how long the
//! feeder stayed above the upper limit and when the tap moved.
//!
//!     cargo run --release --example cvcu_delay

use chil_rig::testbench::{demo_case, parse_testcase, run_case, Evidence, RunOptions, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = parse_testcase(demo_case(Scenario::Cvcu))?;
    let outcome = run_case(&case, RunOptions::default())?;
    let Some(Evidence::Cvcu(ev)) = &outcome.report.evidence else {
        unreachable!("a cvcu case yields cvcu evidence");
    };
    for run in &ev.runs {
        println!("measurement delay {:>4} s", run.meas_delay_s);
        for d in &run.disturbances {
            println!(
                "  disturbance at {:>5.1} s: over-voltage for {:.1} s",
                d.t_event, d.duration_s
            );
        }
        for tap in &run.taps {
            println!("  t = {:>6.1} s  tap {} -> {}", tap.t, tap.from, tap.to);
        }
        println!("  final band [{:.4}, {:.4}] p.u.", run.final_v_min, run.final_v_max);
    }
    println!("overall: {}", if outcome.report.pass { "PASS" } else { "FAIL" });
    Ok(())
}
