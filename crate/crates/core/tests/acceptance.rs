//! One line per headline requirement: `PASS` or `FAIL`, then a short
//! account of what was measured. The test fails if any line fails.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::net::TcpListener;
use std::time::{Duration, Instant};

use chil_rig::analysis::{inverse_symmetrical_components, rise_time, symmetrical_components, thd, PhasorTriple};
use chil_rig::components::{FeederModel, TapTransformer};
use chil_rig::loadflow::{power_balance_residual, solve_radial, DEFAULT_MAX_ITER, DEFAULT_TOL};
use chil_rig::protocol::ClientSession;
use chil_rig::testbench::{
    apply_overrides, demo_case, emit_report, run_case, run_case_with_listener, scenario_controller, Evidence, Formats,
    RunOptions, Scenario, TestCase,
};
use common::{case, nodal_oracle, positive_sequence_series, time_above};
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lvrt_band() -> Outcome {
    let c = case(demo_case(Scenario::Lvrt));
    let started = Instant::now();
    let out = run_case(&c, RunOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let trace = &out.traces[0].1;
    // independent re-evaluation from the raw phase currents
    let n = (1.0 / (50.0 * c.dt())).round() as usize;
    let i_base = 10_000.0 / (3.0 * 230.0);
    let series = positive_sequence_series(trace, n, i_base);
    let settle = |t: f64| [0.2, 0.35].iter().any(|&e| t >= e && t < e + 0.06);
    let outside: Vec<_> = series
        .iter()
        .filter(|(t, _)| !settle(*t))
        .filter(|(_, v)| !(0.9 - 1e-6..=1.2 + 1e-6).contains(v))
        .collect();
    let band_ok = out.report.criteria.iter().any(|k| k.id == "lvrt.band" && k.pass);
    check(
        outside.is_empty() && band_ok && elapsed < Duration::from_secs(10),
        format!(
            "{} evaluated windows, {} outside [0.9, 1.2] p.u.; report verdict {}; runtime {:.2} s",
            series.len(),
            outside.len(),
            band_ok,
            elapsed.as_secs_f64()
        ),
    )
}

fn lvrt_current_limit() -> Outcome {
    let c = case(demo_case(Scenario::Lvrt));
    let out = run_case(&c, RunOptions::default()).map_err(|e| e.to_string())?;
    let trace = &out.traces[0].1;
    let limit = 1.2 * 10_000.0 / (3.0 * 230.0) * SQRT_2 + 1e-6;
    let peak = (1..=3)
        .flat_map(|p| trace.column(&format!("I_L{p}")).unwrap())
        .fold(0.0, |m: f64, x| m.max(x.abs()));
    check(peak <= limit, format!("max |i| = {peak:.7} A, limit {limit:.7} A"))
}

fn cvcu_delay() -> Outcome {
    let base = case(demo_case(Scenario::Cvcu));
    let mut lines = Vec::new();
    let mut ok = true;
    for (delay, lo, hi) in [(0.0, 0.0, 15.0), (60.0, 45.0, 70.0)] {
        let mut c = base.clone();
        apply_overrides(&mut c, None, None, Some(delay)).map_err(|e| e.to_string())?;
        let started = Instant::now();
        let out = run_case(&c, RunOptions::default()).map_err(|e| e.to_string())?;
        let wall = started.elapsed().as_secs_f64();
        let trace = &out.traces[0].1;
        let d = time_above(&trace.times(), &trace.column("v_max_pu").unwrap(), 1.02, 30.0);
        ok &= (lo..=hi).contains(&d) && wall < 5.0;
        lines.push(format!(
            "delay {delay} s: over-voltage {d:.1} s in [{lo}, {hi}], wall {wall:.3} s"
        ));
    }
    check(ok, lines.join("; "))
}

fn rlc_trajectory() -> Outcome {
    let c = case(demo_case(Scenario::Rlctune));
    let out = run_case(&c, RunOptions::default()).map_err(|e| e.to_string())?;
    let Some(Evidence::Rlctune(ev)) = &out.report.evidence else {
        return Err("no tuner evidence".into());
    };
    let trace = &out.traces[0].1;
    let p = trace.column("P_grid").unwrap();
    let initial = p[0];
    let final_p = *p.last().unwrap();
    let coarse = ev.coarse_end_w.unwrap_or(f64::INFINITY);
    let steps = ev.steps_to_done.unwrap_or(u32::MAX);
    // 1 ms steps give 20 samples per 20 ms period; decisions every 100 ms
    let n = 0.02 / c.dt();
    let period_ok = (n - n.round()).abs() < 1e-9 && c.cycle_ticks().is_multiple_of(n.round() as u64);
    check(
        (initial - 5800.0).abs() < 1e-6 && coarse.abs() <= 600.0 && final_p.abs() <= 174.0 && steps <= 15 && period_ok && c.dt() == 1e-3,
        format!(
            "export {initial:.1} W -> coarse end {coarse:.1} W -> final {final_p:.3} W, done after {steps} steps, {} samples per period",
            n.round()
        ),
    )
}

fn analysis_suite() -> Outcome {
    let mut worst_round = 0.0f64;
    let mut worst_positive = 0.0f64;
    for k in 0..200 {
        let x = k as f64;
        let pt = PhasorTriple::new(
            Complex64::new((0.37 * x).sin() * 3.0, (1.3 * x).cos()),
            Complex64::new((0.11 * x).cos() * 2.0, (0.7 * x).sin() * 5.0),
            Complex64::new((2.1 * x).sin(), -(0.9 * x).cos() * 4.0),
        );
        let back = inverse_symmetrical_components(&symmetrical_components(&pt));
        let err = (back.a - pt.a)
            .norm()
            .max((back.b - pt.b).norm())
            .max((back.c - pt.c).norm());
        worst_round = worst_round.max(err);
        let mag = 1.0 + x;
        let ang = 0.1 * x;
        let bal = PhasorTriple::new(
            Complex64::from_polar(mag, ang),
            Complex64::from_polar(mag, ang - 2.0 * PI / 3.0),
            Complex64::from_polar(mag, ang + 2.0 * PI / 3.0),
        );
        let s = symmetrical_components(&bal);
        let dev = (s.positive - bal.a).norm().max(s.negative.norm()).max(s.zero.norm());
        worst_positive = worst_positive.max(dev / mag);
    }
    let dt = 1e-4;
    let sine: Vec<f64> = (0..200).map(|k| (2.0 * PI * 50.0 * k as f64 * dt).sin()).collect();
    let thd_sine = thd(&sine, 50.0, dt, 40).map_err(|e| e.to_string())?;
    let square: Vec<f64> = (0..100)
        .map(|k| {
            if (2.0 * PI * (k as f64 + 0.5) / 100.0).sin() >= 0.0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let thd_square = thd(&square, 50.0, 0.02 / 100.0, 49).map_err(|e| e.to_string())?;
    let tau = 0.01;
    let h = 1e-5;
    let times: Vec<f64> = (0..20_000).map(|k| k as f64 * h).collect();
    let resp: Vec<f64> = times.iter().map(|t| 1.0 - (-t / tau).exp()).collect();
    let rise = rise_time(&times, &resp, 0.1, 0.9, 1.0, 0.0).map_err(|e| e.to_string())?;
    // ln 9 written out so the check does not lean on the implementation
    let ln9 = 2.0 * (3.0f64).ln();
    check(
        worst_round <= 1e-12
            && worst_positive <= 1e-12
            && thd_sine <= 1e-9
            && (thd_square - 0.4829).abs() <= 1e-3
            && (rise - ln9 * tau).abs() <= h,
        format!(
            "round trip {worst_round:.1e}, balanced {worst_positive:.1e}, THD sine {thd_sine:.1e}, THD square {thd_square:.4}, rise {rise:.6} s vs {:.6} s",
            ln9 * tau
        ),
    )
}

fn load_flow_oracle() -> Outcome {
    let shipped = case(demo_case(Scenario::Cvcu));
    let section = shipped.cvcu.as_ref().unwrap();
    let mut feeders: Vec<(String, FeederModel, f64)> = Vec::new();
    let xfmr: &TapTransformer = &section.transformer;
    for tap in [xfmr.tap_min, 0, xfmr.tap_max] {
        let mut t = xfmr.clone();
        t.set_tap(tap);
        feeders.push((format!("demo feeder, tap {tap}"), section.feeder.clone(), t.ratio()));
    }
    let mut after = section.feeder.clone();
    for ev in shipped.events() {
        if let chil_rig::testbench::EventSpec::Set { path, value, .. } = ev {
            after.set_parameter(path, *value);
        }
    }
    feeders.push(("demo feeder after load drop".into(), after, 1.0));
    feeders.push(("default feeder".into(), FeederModel::default(), 1.0));
    let mut worst_v = 0.0f64;
    let mut worst_balance = 0.0f64;
    for (_, f, ratio) in feeders.iter().filter(|(_, f, _)| f.buses.len() <= 4) {
        let sol = solve_radial(f, *ratio, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
        let oracle = nodal_oracle(f, *ratio);
        for (a, b) in sol.voltages.iter().zip(&oracle) {
            worst_v = worst_v.max((a - b).norm());
        }
        worst_balance = worst_balance.max(power_balance_residual(f, &sol).map_err(|e| e.to_string())?.norm());
    }
    check(
        worst_v <= 1e-9 && worst_balance <= 1e-8,
        format!(
            "{} feeder states, worst per-bus deviation {worst_v:.1e} p.u., worst balance residual {worst_balance:.1e} p.u.",
            feeders.len()
        ),
    )
}

fn determinism() -> Outcome {
    let mut files = 0;
    for s in Scenario::ALL {
        let c = case(demo_case(s));
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut listings = Vec::new();
        for d in &dirs {
            let out = run_case(&c, RunOptions::default()).map_err(|e| e.to_string())?;
            let mut written = emit_report(&out, Formats::default(), d.path()).map_err(|e| e.to_string())?;
            written.sort();
            listings.push(written);
        }
        for (a, b) in listings[0].iter().zip(&listings[1]) {
            if a.file_name() != b.file_name() || std::fs::read(a).unwrap() != std::fs::read(b).unwrap() {
                return Err(format!("{}: {} differs between runs", s.as_str(), a.display()));
            }
            files += 1;
        }
    }
    Ok(format!(
        "{files} emitted files byte-identical across two runs of each demo case"
    ))
}

fn loopback_equivalence() -> Outcome {
    let mut direct = case(demo_case(Scenario::Cvcu));
    apply_overrides(&mut direct, None, None, Some(0.0)).map_err(|e| e.to_string())?;
    let reference = run_case(&direct, RunOptions::default()).map_err(|e| e.to_string())?;

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("tcp:{}", listener.local_addr().unwrap());
    let mut remote: TestCase = direct.clone();
    apply_overrides(&mut remote, Some(&endpoint), None, None).map_err(|e| e.to_string())?;
    let logic_case = remote.clone();
    let client = std::thread::spawn(move || {
        let mut session = ClientSession::connect_and_handshake(&endpoint)?;
        let mut logic = scenario_controller(&logic_case).expect("controller builds");
        session.serve_controller(&mut *logic)
    });
    let routed = run_case_with_listener(&remote, RunOptions::default(), Some(&listener)).map_err(|e| e.to_string())?;
    let served = client.join().unwrap().map_err(|e| e.to_string())?;
    let a = reference.traces[0].1.to_csv();
    let b = routed.traces[0].1.to_csv();
    check(
        a == b && routed.report.criteria == reference.report.criteria,
        format!(
            "{} frames served over loopback, trace CSV {} bytes, identical: {}",
            served.frames,
            b.len(),
            a == b
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Check; 8] = [
        ("LVRT band compliance", lvrt_band),
        ("LVRT current-limit invariant", lvrt_current_limit),
        ("CVCU delay experiment", cvcu_delay),
        ("RLC tuning trajectory", rlc_trajectory),
        ("Analysis property suite", analysis_suite),
        ("Load-flow oracle equivalence", load_flow_oracle),
        ("Determinism", determinism),
        ("In-process vs loopback equivalence", loopback_equivalence),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} [PRIMARY] {name}: {detail}");
    }
    assert_eq!(failed, 0, "{failed} primary criteria failed");
}
