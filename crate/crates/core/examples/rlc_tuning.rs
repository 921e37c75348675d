//! Balance a 5.8 kW PV export with the switched RLC bank and print each
//! tuner decision.
//!
//!     cargo run --release --example rlc_tuning

use chil_rig::testbench::{demo_case, parse_testcase, run_case, Evidence, RunOptions, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = parse_testcase(demo_case(Scenario::Rlctune))?;
    let outcome = run_case(&case, RunOptions::default())?;
    let Some(Evidence::Rlctune(ev)) = &outcome.report.evidence else {
        unreachable!("an rlctune case yields tuner evidence");
    };
    println!("step     t    P_grid (W)  action  banks on          g_fine (S)");
    for s in ev
        .trajectory
        .iter()
        .take_while(|s| s.action != "done")
        .chain(ev.trajectory.iter().find(|s| s.action == "done"))
    {
        let banks: String = s.banks_on.iter().map(|b| if *b { '1' } else { '.' }).collect();
        println!(
            "{:>4} {:>5.2} {:>12.1}  {:<7} {:<17} {:.6}",
            s.step, s.t, s.p_grid_w, s.action, banks, s.g_fine
        );
    }
    println!(
        "tolerance ±{:.0} W, done after {:?} steps",
        ev.tolerance_w, ev.steps_to_done
    );
    Ok(())
}
