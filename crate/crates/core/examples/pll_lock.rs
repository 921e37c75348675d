//! The synchronous-reference-frame PLL pulling in from a 30° error and
//! then following a +1 % frequency step.
//!
//!     cargo run --example pll_lock

use std::f64::consts::{PI, TAU};

use chil_rig::components::GridSource;
use chil_rig::controllers::{pll_step, PllGains, PllState};

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dt = 50e-6;
    let gains = PllGains::default();
    let mut grid = GridSource::new(230.0, 50.0)?;
    let mut state = PllState::locked(grid.angle(0.0) + 30f64.to_radians(), 50.0);
    let mut theta = 0.0;
    let mut t = 0.0;
    for k in 0..=8000 {
        if k == 4000 {
            // continue from the angle the old source would have reached
            grid = GridSource::new(230.0, 50.5)?.with_phase_offset(theta + TAU * 50.0 * dt);
            t = 0.0;
            println!("-- frequency step to 50.5 Hz");
        }
        theta = grid.angle(t);
        if k % 400 == 0 {
            println!(
                "t = {:5.3} s  angle error {:>8.4} rad  f = {:.3} Hz",
                k as f64 * dt,
                wrap(state.angle - theta),
                state.omega / TAU
            );
        }
        state = pll_step(grid.voltages(t), &state, &gains, dt);
        t += dt;
    }
    Ok(())
}
