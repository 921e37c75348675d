//! Plant assembly and trace-based evaluation for each scenario.
//!
//! Every verdict is computed from the recorded trace alone, so a report
//! can be re-derived from its CSV evidence.

use std::f64::consts::SQRT_2;

use super::case::{CvcuSection, EventSpec, LvrtSection, RlcSection, Scenario, TestCase};
use super::report::{
    Criterion, CvcuEvidence, CvcuRunEvidence, Disturbance, Evidence, LvrtEvidence, RlcEvidence, TapChange, ThdWindow,
    TunerStep,
};
use super::TestbenchError;
use crate::analysis::{
    band_check, rise_time, samples_per_period, symmetrical_components, thd, Band, PhasorTriple, SlidingPhasor,
};
use crate::components::GridSource;
use crate::controllers::{CvcuController, EchoController, LvrtController, LvrtPlant, RlcTuner};
use crate::sim::{format_sig9, ticks_for, Controller, FeederStage, Network, PvChain, RlcStage, Trace};

fn missing(section: &str) -> TestbenchError {
    TestbenchError::Validation(format!("case has no `{section}` section"))
}

pub(crate) fn lvrt_section(case: &TestCase) -> Result<&LvrtSection, TestbenchError> {
    case.lvrt.as_ref().ok_or_else(|| missing("lvrt"))
}

pub(crate) fn cvcu_section(case: &TestCase) -> Result<&CvcuSection, TestbenchError> {
    case.cvcu.as_ref().ok_or_else(|| missing("cvcu"))
}

pub(crate) fn rlc_section(case: &TestCase) -> Result<&RlcSection, TestbenchError> {
    case.rlctune.as_ref().ok_or_else(|| missing("rlctune"))
}

fn grid_of(spec: &super::case::GridSpec) -> Result<GridSource, TestbenchError> {
    Ok(GridSource::new(spec.u_rms, spec.f0)?.with_phase_offset(spec.phase_offset))
}

/// Initial active current (p.u.) that balances the PV power at the initial
/// DC voltage.
fn lvrt_initial_i_d(s: &LvrtSection) -> Result<f64, TestbenchError> {
    let curve = s.pv.curve()?;
    let v_dc = s.dc_link.v_dc.unwrap_or(s.pv.v_mpp);
    Ok(curve.power(v_dc) / (3.0 * s.grid.u_rms * s.inverter.rated_current()))
}

/// The simulated plant of a case, before any event has fired.
pub fn build_network(case: &TestCase) -> Result<Network, TestbenchError> {
    match case.scenario {
        Scenario::Lvrt => {
            let s = lvrt_section(case)?;
            let mut inverter = s.inverter.clone();
            inverter.set_current_dq((lvrt_initial_i_d(s)?, 0.0));
            let v_dc = s.dc_link.v_dc.unwrap_or(s.pv.v_mpp);
            let pv = PvChain::new(s.pv.clone(), v_dc, s.dc_link.capacitance, inverter)?;
            Ok(Network::idle().with_grid(grid_of(&s.grid)?).with_pv_chain(pv))
        }
        Scenario::Cvcu => {
            let s = cvcu_section(case)?;
            let stage = FeederStage::new(s.feeder.clone(), s.transformer.clone())?;
            Ok(Network::idle().with_feeder(stage))
        }
        Scenario::Rlctune => {
            let s = rlc_section(case)?;
            let rlc = RlcStage::new(s.bank.clone(), s.p_pv)?;
            Ok(Network::idle().with_grid(grid_of(&s.grid)?).with_rlc(rlc))
        }
    }
}

/// The in-process reference controller a case names.
pub fn reference_controller(case: &TestCase) -> Result<Box<dyn Controller>, TestbenchError> {
    let name = match case.binding() {
        super::case::ControllerBinding::InProcess(name) => name,
        super::case::ControllerBinding::External(_) => case.scenario.as_str().to_string(),
    };
    if name == "echo" {
        return Ok(Box::new(EchoController));
    }
    scenario_controller(case)
}

/// The reference controller of the case's scenario, regardless of binding.
/// External controller processes use this to run the same logic.
pub fn scenario_controller(case: &TestCase) -> Result<Box<dyn Controller>, TestbenchError> {
    match case.scenario {
        Scenario::Lvrt => {
            let s = lvrt_section(case)?;
            let grid = grid_of(&s.grid)?;
            let plant = LvrtPlant {
                u_rms_nominal: s.grid.u_rms,
                f0: s.grid.f0,
                rated_power: s.inverter.rated_power,
                v_mpp: s.pv.v_mpp,
                initial_angle: grid.angle(0.0),
            };
            let c = LvrtController::new(s.controller.clone(), plant, case.dt(), (lvrt_initial_i_d(s)?, 0.0))?;
            Ok(Box::new(c))
        }
        Scenario::Cvcu => {
            let s = cvcu_section(case)?;
            Ok(Box::new(CvcuController::new(
                s.controller.clone(),
                &s.feeder,
                &s.transformer,
            )?))
        }
        Scenario::Rlctune => {
            let s = rlc_section(case)?;
            Ok(Box::new(RlcTuner::new(s.controller.clone(), &s.bank, s.p_pv)?))
        }
    }
}

/// Scenario-specific checks that need the assembled plant.
pub(crate) fn validate_plant(case: &TestCase) -> Result<(), TestbenchError> {
    let fail = |msg: String| Err(TestbenchError::Validation(msg));
    let network = build_network(case)?;
    for ev in case.events() {
        match ev {
            EventSpec::Set { path, .. } if !network.has_parameter(path) => {
                return fail(format!("event parameter `{path}` does not exist in the plant"));
            }
            EventSpec::FaultApply { .. } | EventSpec::FaultClear { .. } if network.grid().is_none() => {
                return fail("fault events need a grid source".into());
            }
            _ => {}
        }
    }
    let dt = case.dt();
    let row_dt = dt * case.decimation() as f64;
    match case.scenario {
        Scenario::Lvrt => {
            let s = lvrt_section(case)?;
            s.controller.validate()?;
            let e = &s.evaluation;
            if !(e.upper > e.lower) {
                return fail(format!(
                    "evaluation band needs upper > lower, got [{}, {}]",
                    e.lower, e.upper
                ));
            }
            if !(e.settle >= 0.0 && e.context >= 0.0 && e.rise_limit > 0.0) {
                return fail("settle, context must be >= 0 and rise_limit > 0".into());
            }
            if !(0.0 <= e.rise_low && e.rise_low < e.rise_high && e.rise_high <= 1.0) {
                return fail("rise thresholds need 0 <= rise_low < rise_high <= 1".into());
            }
            let n = whole_period(s.grid.f0, row_dt).ok_or_else(|| {
                TestbenchError::Validation(format!(
                    "recorded row interval {row_dt} s does not divide the {} Hz period",
                    s.grid.f0
                ))
            })?;
            if e.thd_harmonics < 2 || 2 * e.thd_harmonics >= n {
                return fail(format!(
                    "thd_harmonics {} must lie in [2, {}) for {n} samples per period",
                    e.thd_harmonics,
                    n / 2
                ));
            }
            if case.duration() * s.grid.f0 < 1.0 - 1e-9 {
                return fail("duration shorter than one fundamental period".into());
            }
            if case.cycle_ticks() != 1 {
                return fail("the lvrt controller runs every time step: controller_cycle must equal dt".into());
            }
        }
        Scenario::Cvcu => {
            let s = cvcu_section(case)?;
            s.controller.validate()?;
            for l in &s.evaluation.duration_limits {
                if !(l.min <= l.max) {
                    return fail(format!("duration limit for delay {} has min > max", l.meas_delay));
                }
            }
        }
        Scenario::Rlctune => {
            let s = rlc_section(case)?;
            let n = whole_period(s.grid.f0, dt).ok_or_else(|| {
                TestbenchError::Validation(format!("dt {dt} s does not divide the {} Hz period", s.grid.f0))
            })?;
            if case.cycle_ticks() < n as u64 {
                return fail(format!(
                    "tuner cycle must cover at least one fundamental period ({n} samples)"
                ));
            }
            if !case.cycle_ticks().is_multiple_of(case.decimation()) {
                return fail("decimation must divide the tuner cycle so every decision is recorded".into());
            }
            if s.evaluation.max_steps == 0 {
                return fail("max_steps must be >= 1".into());
            }
        }
    }
    Ok(())
}

/// Samples per period when `1/(f0·h)` is an integer to within 1e-9.
fn whole_period(f0: f64, h: f64) -> Option<usize> {
    let n = samples_per_period(f0, h).ok()?;
    ((n as f64 * h * f0 - 1.0).abs() < 1e-9).then_some(n)
}

fn column(trace: &Trace, name: &str) -> Result<Vec<f64>, TestbenchError> {
    trace
        .column(name)
        .ok_or_else(|| TestbenchError::Evaluation(format!("trace has no column `{name}`")))
}

/// Index of the first row at or after time `t`.
fn row_at(times: &[f64], t: f64, row_dt: f64) -> usize {
    times.partition_point(|&x| x < t - 1e-9 * row_dt)
}

/// Verdicts and evidence for a finished case.
pub struct Evaluation {
    pub criteria: Vec<Criterion>,
    pub evidence: Evidence,
    pub extra_csv: Vec<(String, String)>,
}

/// Evaluate a case from its traces, one per measurement delay in case
/// order. `diverged` carries a tuner divergence that stopped the run.
pub fn evaluate(case: &TestCase, traces: &[&Trace], diverged: Option<&str>) -> Result<Evaluation, TestbenchError> {
    match case.scenario {
        Scenario::Lvrt => {
            let trace = traces
                .first()
                .ok_or_else(|| TestbenchError::Evaluation("no trace to evaluate".into()))?;
            evaluate_lvrt(case, trace)
        }
        Scenario::Cvcu => evaluate_cvcu(case, traces),
        Scenario::Rlctune => evaluate_rlctune(case, traces.first().copied(), diverged),
    }
}

/// Positive-sequence quantities over a one-period sliding window; element
/// `k` belongs to row `k + n − 1`.
struct SequenceSeries {
    times: Vec<f64>,
    v_pos_pu: Vec<f64>,
    i_b1_pu: Vec<f64>,
    i_q_pu: Vec<f64>,
}

fn sequence_series(trace: &Trace, s: &LvrtSection, n: usize) -> Result<SequenceSeries, TestbenchError> {
    let sp = SlidingPhasor::new(n);
    let series = |prefix: &str| -> Result<Vec<Vec<_>>, TestbenchError> {
        (1..=3)
            .map(|k| column(trace, &format!("{prefix}{k}")).map(|x| sp.series(&x)))
            .collect()
    };
    let u = series("U_L")?;
    let i = series("I_L")?;
    let i_rated = s.inverter.rated_current();
    let mut out = SequenceSeries {
        times: trace.times().get(n.saturating_sub(1)..).unwrap_or(&[]).to_vec(),
        v_pos_pu: Vec::new(),
        i_b1_pu: Vec::new(),
        i_q_pu: Vec::new(),
    };
    for k in 0..u[0].len() {
        let v1 = symmetrical_components(&PhasorTriple::new(u[0][k], u[1][k], u[2][k])).positive;
        let i1 = symmetrical_components(&PhasorTriple::new(i[0][k], i[1][k], i[2][k])).positive;
        let v_abs = v1.norm();
        out.v_pos_pu.push(v_abs / s.grid.u_rms);
        out.i_b1_pu.push(i1.norm() / i_rated);
        // reactive share, positive when the current leads (capacitive)
        out.i_q_pu.push(if v_abs > 1e-9 {
            (i1 * v1.conj()).im / v_abs / i_rated
        } else {
            0.0
        });
    }
    Ok(out)
}

fn max_thd(
    trace: &Trace,
    prefix: &str,
    range: std::ops::Range<usize>,
    f0: f64,
    h: usize,
) -> Result<Option<f64>, TestbenchError> {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let x = column(trace, &format!("{prefix}{k}"))?;
        let value = thd(&x[range.clone()], f0, trace.row_interval(), h)
            .map_err(|e| TestbenchError::Evaluation(e.to_string()))?;
        if !value.is_finite() {
            return Ok(None);
        }
        worst = worst.max(value);
    }
    Ok(Some(worst))
}

fn evaluate_lvrt(case: &TestCase, trace: &Trace) -> Result<Evaluation, TestbenchError> {
    let s = lvrt_section(case)?;
    let e = &s.evaluation;
    let f0 = s.grid.f0;
    let row_dt = trace.row_interval();
    let n = whole_period(f0, row_dt)
        .ok_or_else(|| TestbenchError::Evaluation("row interval does not divide the period".into()))?;
    let seq = sequence_series(trace, s, n)?;
    let edges = case.fault_edges();
    let fault_start = case.events().iter().find_map(|ev| match ev {
        EventSpec::FaultApply { t, residual } => Some((*t, *residual)),
        _ => None,
    });
    let fault_end = fault_start.and_then(|(tf, _)| {
        case.events().iter().find_map(|ev| match ev {
            EventSpec::FaultClear { t } if *t > tf => Some(*t),
            _ => None,
        })
    });
    let mut criteria = Vec::new();

    let band = band_check(&seq.times, &seq.i_b1_pu, Band::new(e.lower, e.upper), e.settle, &edges)
        .map_err(|err| TestbenchError::Evaluation(err.to_string()))?;
    criteria.push(Criterion::new(
        "lvrt.band",
        "positive-sequence current I_b1_per_norm inside the band outside settle windows",
        Some(band.violations.len() as f64),
        format!(
            "0 violations of [{}, {}] p.u. (settle {} s)",
            e.lower, e.upper, e.settle
        ),
        band.pass,
    ));

    let i_rated = s.inverter.rated_current();
    let peak_limit = e.upper * i_rated * SQRT_2 + e.current_margin;
    let mut max_current: f64 = 0.0;
    for k in 1..=3 {
        for x in column(trace, &format!("I_L{k}"))? {
            max_current = max_current.max(x.abs());
        }
    }
    criteria.push(Criterion::new(
        "lvrt.current_limit",
        "largest instantaneous phase current over the run",
        Some(max_current),
        format!("<= {} A ({} p.u. peak)", format_sig9(peak_limit), e.upper),
        max_current <= peak_limit,
    ));

    let mut rise_target = 0.0;
    let mut rise = None;
    if let Some((tf, residual)) = fault_start {
        let v_res = residual.iter().sum::<f64>() / 3.0;
        rise_target = (e.required_k * (1.0 - v_res)).clamp(0.0, e.upper);
        let end = fault_end.map_or(seq.times.len(), |tc| row_at(&seq.times, tc, row_dt));
        if rise_target > 0.0 {
            let result = rise_time(
                &seq.times[..end],
                &seq.i_q_pu[..end],
                e.rise_low,
                e.rise_high,
                rise_target,
                tf,
            );
            rise = result.ok();
            criteria.push(Criterion::new(
                "lvrt.rise_time",
                format!(
                    "rise of the reactive current from {}% to {}% of {:.3} p.u. after fault start",
                    e.rise_low * 100.0,
                    e.rise_high * 100.0,
                    rise_target
                ),
                rise,
                format!("<= {} s", e.rise_limit),
                rise.is_some_and(|r| r <= e.rise_limit),
            ));
        }
    }

    let times = trace.times();
    let mut windows: Vec<(String, std::ops::Range<usize>)> = Vec::new();
    match fault_start {
        Some((tf, _)) => {
            let rf = row_at(&times, tf, row_dt);
            if rf >= n {
                windows.push(("pre-fault".into(), rf - n..rf));
            }
            if let Some(tc) = fault_end {
                let rc = row_at(&times, tc, row_dt);
                if rc >= rf + n {
                    windows.push(("in-fault".into(), rc - n..rc));
                }
            }
        }
        None if times.len() >= n => windows.push(("steady".into(), times.len() - n..times.len())),
        None => {}
    }
    let mut thd_windows = Vec::new();
    for (label, range) in windows {
        thd_windows.push(ThdWindow {
            label,
            t_start: times[range.start],
            t_end: times[range.end - 1],
            thd_u: max_thd(trace, "U_L", range.clone(), f0, e.thd_harmonics)?,
            thd_i: max_thd(trace, "I_L", range, f0, e.thd_harmonics)?,
        });
    }
    for (id, what, pick) in [
        (
            "lvrt.thd_u",
            "voltage THD (THDV), worst phase and window",
            (|w: &ThdWindow| w.thd_u) as fn(&ThdWindow) -> Option<f64>,
        ),
        (
            "lvrt.thd_i",
            "current THD (THDI), worst phase and window",
            |w: &ThdWindow| w.thd_i,
        ),
    ] {
        // a window whose fundamental vanished (a dip to zero) has no THD;
        // it is reported in the evidence and left out of the verdict
        let defined: Vec<f64> = thd_windows.iter().filter_map(pick).collect();
        let skipped = thd_windows.len() - defined.len();
        if defined.is_empty() {
            continue;
        }
        let worst = defined.into_iter().fold(0.0, f64::max);
        let mut description = format!("{what}, harmonics 2..{}", e.thd_harmonics);
        if skipped > 0 {
            description.push_str(&format!(", {skipped} window(s) without a fundamental left out"));
        }
        criteria.push(Criterion::new(
            id,
            description,
            Some(worst),
            format!("<= {}", e.thd_limit),
            worst <= e.thd_limit,
        ));
    }

    let last_before = |t: f64| {
        let r = row_at(&seq.times, t, row_dt);
        (r > 0).then(|| seq.i_b1_pu[r - 1])
    };
    let mut extra_csv = Vec::new();
    let mut context_window = None;
    let mut context_file = None;
    if let Some((tf, _)) = fault_start {
        let window = (tf - e.context, tf + e.context);
        let mut csv = String::from("t,V_pos_pu,I_b1_per_norm,I_q_pu\n");
        for k in 0..seq.times.len() {
            let t = seq.times[k];
            if t >= window.0 - 1e-9 * row_dt && t <= window.1 + 1e-9 * row_dt {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    format_sig9(t),
                    format_sig9(seq.v_pos_pu[k]),
                    format_sig9(seq.i_b1_pu[k]),
                    format_sig9(seq.i_q_pu[k])
                ));
            }
        }
        extra_csv.push(("lvrt_context.csv".to_string(), csv));
        context_window = Some(window);
        context_file = Some("lvrt_context.csv".to_string());
    }
    let in_settle = |t: f64| band.settle_windows.iter().any(|&(a, b)| t >= a && t < b);
    let i_b1_max_evaluated = seq
        .times
        .iter()
        .zip(&seq.i_b1_pu)
        .filter(|(t, _)| !in_settle(**t))
        .fold(0.0, |m: f64, (_, v)| m.max(*v));
    let evidence = LvrtEvidence {
        i_b1_pre_fault: fault_start.and_then(|(tf, _)| last_before(tf)),
        i_b1_in_fault: fault_end.and_then(last_before),
        i_b1_max_evaluated,
        rise_time_s: rise,
        rise_target_pu: rise_target,
        thd: thd_windows,
        max_phase_current_a: max_current,
        phase_current_limit_a: peak_limit,
        context_window,
        context_file,
        band,
    };
    Ok(Evaluation {
        criteria,
        evidence: Evidence::Lvrt(evidence),
        extra_csv,
    })
}

fn evaluate_cvcu(case: &TestCase, traces: &[&Trace]) -> Result<Evaluation, TestbenchError> {
    let s = cvcu_section(case)?;
    let upper = s.controller.upper;
    let band = Band::new(s.controller.lower, upper);
    let mut disturbance_times: Vec<f64> = case
        .events()
        .iter()
        .filter(|ev| matches!(ev, EventSpec::Set { .. }))
        .map(EventSpec::t)
        .collect();
    disturbance_times.sort_by(f64::total_cmp);
    disturbance_times.dedup();
    let monitored: Vec<String> = s
        .feeder
        .buses
        .iter()
        .filter(|b| b.monitored)
        .map(|b| format!("V_{}_pu", b.name))
        .collect();

    let mut criteria = Vec::new();
    let mut runs = Vec::new();
    for (&delay, trace) in case.meas_delays().iter().zip(traces) {
        let times = trace.times();
        let row_dt = trace.row_interval();
        let v_max = column(trace, "v_max_pu")?;
        let v_min = column(trace, "v_min_pu")?;
        let tap = column(trace, "tap_pos")?;
        let mut disturbances = Vec::new();
        for (k, &td) in disturbance_times.iter().enumerate() {
            let from = row_at(&times, td, row_dt);
            let until = disturbance_times
                .get(k + 1)
                .map_or(times.len(), |&next| row_at(&times, next, row_dt));
            let start = (from..until).find(|&r| v_max[r] > upper);
            let end = start.and_then(|a| (a..until).find(|&r| v_max[r] <= upper));
            let duration = match (start, end) {
                (Some(a), Some(b)) => times[b] - times[a],
                (Some(a), None) => times[until - 1] + row_dt - times[a],
                _ => 0.0,
            };
            disturbances.push(Disturbance {
                t_event: td,
                t_start: start.map(|r| times[r]),
                t_end: end.map(|r| times[r]),
                duration_s: duration,
            });
        }
        if let Some(limit) = s
            .evaluation
            .duration_limits
            .iter()
            .find(|l| (l.meas_delay - delay).abs() <= 1e-9 * l.meas_delay.abs().max(1.0))
        {
            for d in &disturbances {
                criteria.push(Criterion::new(
                    format!("cvcu.overvoltage[delay={delay}s,t={}s]", d.t_event),
                    format!("contiguous time with v_max above {upper} p.u. after the disturbance"),
                    Some(d.duration_s),
                    format!("[{}, {}] s", limit.min, limit.max),
                    d.duration_s >= limit.min && d.duration_s <= limit.max,
                ));
            }
        }
        let last = times.len().saturating_sub(1);
        let mut worst_final = None;
        for name in &monitored {
            let v = column(trace, name)?[last];
            if !band.contains(v) {
                worst_final = Some(v);
            }
        }
        criteria.push(Criterion::new(
            format!("cvcu.final_band[delay={delay}s]"),
            "all monitored bus voltages inside the limits at the end of the run",
            Some(v_max[last] - v_min[last]),
            format!("[{}, {}] p.u.", s.controller.lower, upper),
            worst_final.is_none(),
        ));
        let taps = (1..tap.len())
            .filter(|&r| tap[r] != tap[r - 1])
            .map(|r| TapChange {
                t: times[r],
                from: tap[r - 1] as i64,
                to: tap[r] as i64,
            })
            .collect();
        runs.push(CvcuRunEvidence {
            meas_delay_s: delay,
            disturbances,
            taps,
            final_v_min: v_min[last],
            final_v_max: v_max[last],
        });
    }
    Ok(Evaluation {
        criteria,
        evidence: Evidence::Cvcu(CvcuEvidence { runs }),
        extra_csv: Vec::new(),
    })
}

fn evaluate_rlctune(
    case: &TestCase,
    trace: Option<&Trace>,
    diverged: Option<&str>,
) -> Result<Evaluation, TestbenchError> {
    let s = rlc_section(case)?;
    let p_ref = s.p_reference();
    let tol_w = s.controller.tolerance * p_ref;
    let n = whole_period(s.grid.f0, case.dt()).unwrap_or(0);
    let cycle = case.cycle_ticks();
    let mut criteria = vec![Criterion::new(
        "rlc.window",
        format!("grid power averaged over whole fundamental periods, decisions every {cycle} samples"),
        Some(n as f64),
        "one period of an integer number of samples, tuner cycle >= one period",
        n > 0 && cycle >= n as u64,
    )];
    let mut evidence = RlcEvidence {
        p_reference_w: p_ref,
        tolerance_w: tol_w,
        window_samples: n,
        trajectory: Vec::new(),
        coarse_end_w: None,
        final_p_grid_w: f64::NAN,
        steps_to_done: None,
        diverged: diverged.map(str::to_string),
    };
    let trace = match (trace, diverged) {
        (Some(t), None) => t,
        _ => {
            criteria.push(Criterion::new(
                "rlc.converged",
                diverged.unwrap_or("no trace recorded"),
                None,
                "tuner reaches Done",
                false,
            ));
            evidence.final_p_grid_w = 0.0;
            return Ok(Evaluation {
                criteria,
                evidence: Evidence::Rlctune(evidence),
                extra_csv: Vec::new(),
            });
        }
    };

    let p_grid = column(trace, "P_grid")?;
    let g_fine = column(trace, "g_fine")?;
    let banks = (0..s.bank.banks.len())
        .map(|k| column(trace, &format!("bank{k}_on")))
        .collect::<Result<Vec<_>, _>>()?;
    let d = case.decimation();
    let rows = trace.rows();
    let last_tick = rows.last().map_or(0, |r| r.tick);
    let row_of = |tick: u64| (tick / d) as usize;
    let mask = |r: usize| banks.iter().map(|b| b[r] >= 0.5).collect::<Vec<_>>();

    let mut k = 0u64;
    while k * cycle < last_tick {
        let c = k * cycle;
        let r = row_of(c);
        let next = row_of(((k + 1) * cycle).min(last_tick));
        let p = p_grid[r];
        let action = if mask(next) != mask(r) {
            "switch"
        } else if g_fine[next] != g_fine[r] {
            "fine"
        } else if p.abs() <= tol_w {
            "done"
        } else if (k + 1) * cycle > last_tick {
            "pending"
        } else {
            "none"
        };
        evidence.trajectory.push(TunerStep {
            step: k as u32 + 1,
            t: rows[r].t,
            p_grid_w: p,
            action: action.into(),
            banks_on: mask(r),
            g_fine: g_fine[r],
        });
        k += 1;
    }
    let traj = &evidence.trajectory;
    evidence.steps_to_done = traj.iter().find(|s| s.action == "done").map(|s| s.step);
    evidence.coarse_end_w = traj.iter().find(|s| s.action != "switch").map(|s| s.p_grid_w);
    evidence.final_p_grid_w = *p_grid.last().unwrap_or(&0.0);
    let monotone = traj
        .windows(2)
        .filter(|w| w[0].action == "switch")
        .all(|w| w[1].p_grid_w.abs() < w[0].p_grid_w.abs());

    criteria.push(Criterion::new(
        "rlc.coarse_end",
        "grid power when the coarse phase hands over",
        evidence.coarse_end_w,
        format!("|P_grid| <= {} W", s.evaluation.coarse_max),
        evidence
            .coarse_end_w
            .is_some_and(|p| p.abs() <= s.evaluation.coarse_max),
    ));
    criteria.push(Criterion::new(
        "rlc.coarse_monotone",
        "every bank switch reduces |P_grid|",
        None,
        "strictly decreasing",
        monotone,
    ));
    criteria.push(Criterion::new(
        "rlc.final",
        "grid power at the end of the run",
        Some(evidence.final_p_grid_w),
        format!(
            "|P_grid| <= {} W ({}% of {} W)",
            format_sig9(tol_w),
            s.controller.tolerance * 100.0,
            p_ref
        ),
        evidence.final_p_grid_w.abs() <= tol_w,
    ));
    criteria.push(Criterion::new(
        "rlc.steps",
        "tuner invocations up to and including Done",
        evidence.steps_to_done.map(f64::from),
        format!("<= {}", s.evaluation.max_steps),
        evidence.steps_to_done.is_some_and(|n| n <= s.evaluation.max_steps),
    ));
    Ok(Evaluation {
        criteria,
        evidence: Evidence::Rlctune(evidence),
        extra_csv: Vec::new(),
    })
}

/// Measurement delay in ticks.
pub(crate) fn delay_ticks(delay: f64, dt: f64) -> u64 {
    ticks_for(delay, dt).unwrap_or(0)
}
