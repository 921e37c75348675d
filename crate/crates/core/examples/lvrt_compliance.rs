//! Run the shipped voltage-dip case and print the verdict table, the
//! positive-sequence current just before and inside the dip, and where
//! the evidence files would go.
//!
//!     cargo run --release --example lvrt_compliance

use chil_rig::testbench::{demo_case, parse_testcase, run_case, Evidence, RunOptions, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = parse_testcase(demo_case(Scenario::Lvrt))?;
    let outcome = run_case(&case, RunOptions::default())?;
    print!("{}", outcome.report.to_text());

    if let Some(Evidence::Lvrt(ev)) = &outcome.report.evidence {
        println!();
        println!(
            "I_b1 before the dip   {:.3} p.u.",
            ev.i_b1_pre_fault.unwrap_or(f64::NAN)
        );
        println!("I_b1 at end of dip    {:.3} p.u.", ev.i_b1_in_fault.unwrap_or(f64::NAN));
        println!("reactive target       {:.3} p.u.", ev.rise_target_pu);
        if let Some(r) = ev.rise_time_s {
            println!("rise time             {:.1} ms", r * 1e3);
        }
        println!(
            "peak phase current    {:.3} A (limit {:.3} A)",
            ev.max_phase_current_a, ev.phase_current_limit_a
        );
    }
    Ok(())
}
