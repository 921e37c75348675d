//! Sweep the dip depth of the voltage-dip case on all cores.
//!
//! A dip to zero leaves no voltage to measure the reactive current
//! against, so that case fails its rise-time criterion.
//!
//!     cargo run --release --example parallel_batch

use chil_rig::testbench::{demo_case, parse_testcase, run_batch, EventSpec, RunOptions, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = parse_testcase(demo_case(Scenario::Lvrt))?;
    let residuals = [0.0, 0.05, 0.2, 0.4, 0.6, 0.8];
    let cases: Vec<_> = residuals
        .iter()
        .map(|&r| {
            let mut c = base.clone();
            c.name = format!("dip-to-{r}");
            c.events = Some(vec![
                EventSpec::FaultApply {
                    t: 0.2,
                    residual: [r; 3],
                },
                EventSpec::FaultClear { t: 0.35 },
            ]);
            c.validate().map(|_| c)
        })
        .collect::<Result<_, _>>()?;
    let workers = std::thread::available_parallelism().map_or(2, |n| n.get());
    for result in run_batch(&cases, RunOptions::default(), workers) {
        let report = result?.report;
        let failed: Vec<_> = report
            .criteria
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.as_str())
            .collect();
        println!(
            "{:<12} {}  {}",
            report.case,
            if report.pass { "PASS" } else { "FAIL" },
            failed.join(" ")
        );
    }
    Ok(())
}
