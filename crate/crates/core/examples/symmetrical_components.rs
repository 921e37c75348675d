//! Phasors, Fortescue decomposition and THD on synthetic waveforms.
//!
//!     cargo run --example symmetrical_components

use std::f64::consts::{PI, SQRT_2};

use chil_rig::analysis::{fundamental_phasor, symmetrical_components, thd, PhasorTriple};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (f0, dt): (f64, f64) = (50.0, 50e-6);
    let n = (1.0 / (f0 * dt)).round() as usize;
    // an unbalanced set: phase 2 sags to 60 %, phase 3 carries a 5th harmonic
    let wave = |k: usize, amp: f64, shift: f64, h5: f64| {
        let w = 2.0 * PI * f0 * k as f64 * dt;
        SQRT_2 * 230.0 * (amp * (w - shift).sin() + h5 * (5.0 * (w - shift)).sin())
    };
    let phases: Vec<Vec<f64>> = [
        (1.0, 0.0, 0.0),
        (0.6, 2.0 * PI / 3.0, 0.0),
        (1.0, -2.0 * PI / 3.0, 0.04),
    ]
    .iter()
    .map(|&(a, s, h)| (0..n).map(|k| wave(k, a, s, h)).collect())
    .collect();

    let ph: Vec<_> = phases
        .iter()
        .map(|x| fundamental_phasor(x, f0, dt))
        .collect::<Result<_, _>>()?;
    for (i, p) in ph.iter().enumerate() {
        println!("U_L{} = {:7.2} V ∠ {:7.2}°", i + 1, p.norm(), p.arg().to_degrees());
    }
    let seq = symmetrical_components(&PhasorTriple::new(ph[0], ph[1], ph[2]));
    println!(
        "positive {:7.2} V, negative {:6.2} V, zero {:6.2} V",
        seq.positive.norm(),
        seq.negative.norm(),
        seq.zero.norm()
    );
    for (i, x) in phases.iter().enumerate() {
        println!("THD U_L{} = {:.4}", i + 1, thd(x, f0, dt, 40)?);
    }
    Ok(())
}
