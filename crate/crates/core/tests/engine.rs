mod common;

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use chil_rig::components::GridSource;
use chil_rig::sim::{run, EngineConfig, Network};
use chil_rig::testbench::{demo_case, run_case, RunOptions, Scenario};
use common::case;

#[test]
fn idle_network_stays_at_zero() {
    let mut net = Network::idle();
    let out = run(&mut net, vec![], EngineConfig::new(1e-3, 0.01), vec![]).unwrap();
    assert_eq!(out.trace.len(), 11);
    for (k, row) in out.trace.rows().iter().enumerate() {
        assert_eq!(row.tick, k as u64);
        assert!(row.values.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn grid_at_quarter_period_reference_peaks_at_zero_time() {
    let grid = GridSource::new(230.0, 50.0).unwrap().with_phase_offset(FRAC_PI_2);
    let mut net = Network::idle().with_grid(grid);
    let out = run(&mut net, vec![], EngineConfig::new(50e-6, 0.0), vec![]).unwrap();
    let u = out.trace.column("U_L1").unwrap()[0];
    assert!((u - 230.0 * SQRT_2).abs() < 1e-9);
    assert_eq!(format!("{u:.2}"), "325.27");
}

#[test]
fn row_count_follows_duration_and_decimation() {
    let grid = GridSource::new(230.0, 50.0).unwrap();
    for (decimation, rows) in [(1, 2001), (4, 501), (3, 667)] {
        let mut net = Network::idle().with_grid(grid.clone());
        let cfg = EngineConfig {
            decimation,
            ..EngineConfig::new(50e-6, 0.1)
        };
        assert_eq!(run(&mut net, vec![], cfg, vec![]).unwrap().trace.len(), rows);
    }
}

#[test]
fn fault_leaves_earlier_samples_untouched() {
    let with_fault = case(demo_case(Scenario::Lvrt));
    let mut without = with_fault.clone();
    without.events = Some(vec![]);
    let a = run_case(&with_fault, RunOptions::default()).unwrap();
    let b = run_case(&without, RunOptions::default()).unwrap();
    let (ta, tb) = (&a.traces[0].1, &b.traces[0].1);
    assert_eq!(ta.columns(), tb.columns());
    let before = ta.rows().iter().take_while(|r| r.t < 0.2).count();
    assert_eq!(before, 4000);
    for (ra, rb) in ta.rows()[..before].iter().zip(&tb.rows()[..before]) {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ra.values), bits(&rb.values), "tick {}", ra.tick);
    }
    // and the fault is visible from the first sample at its time
    let u = ta.column("U_L1").unwrap();
    let peak_after = u[before..before + 400].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(peak_after <= 0.05 * 230.0 * SQRT_2 + 1e-9);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let c = case(demo_case(Scenario::Lvrt));
    let a = run_case(&c, RunOptions::default()).unwrap();
    let b = run_case(&c, RunOptions::default()).unwrap();
    assert_eq!(a.traces[0].1, b.traces[0].1);
}
