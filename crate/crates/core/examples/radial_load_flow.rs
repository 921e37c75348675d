//! Solve the synthetic feeder at every tap position and show how the
//! voltage band moves.
//!
//!     cargo run --example radial_load_flow

use chil_rig::components::{FeederModel, TapTransformer};
use chil_rig::loadflow::{power_balance_residual, solve_radial, voltage_extrema, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let feeder = FeederModel::default();
    let mut xfmr = TapTransformer::default();
    println!("{}", feeder.label);
    println!(" tap  ratio    v_min    v_max   spread  iterations");
    for tap in xfmr.tap_min..=xfmr.tap_max {
        xfmr.set_tap(tap);
        let sol = solve_radial(&feeder, xfmr.ratio(), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
        let e = voltage_extrema(&sol);
        println!(
            "{tap:>4} {:.3} {:>8.4} {:>8.4} {:>8.4} {:>6}",
            xfmr.ratio(),
            e.v_min,
            e.v_max,
            e.spread,
            sol.iterations
        );
    }
    xfmr.set_tap(0);
    let sol = solve_radial(&feeder, xfmr.ratio(), DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    println!(
        "slack supplies {:.4} p.u.; balance residual {:.1e}",
        sol.slack_power,
        power_balance_residual(&feeder, &sol)?.norm()
    );
    Ok(())
}
