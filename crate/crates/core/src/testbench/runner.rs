use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use super::case::{ControllerBinding, TestCase};
use super::report::{CaseOutcome, RunRecord, TestReport, REPORT_SCHEMA};
use super::scenario::{build_network, delay_ticks, evaluate, reference_controller};
use super::TestbenchError;
use crate::controllers::ControllerError;
use crate::protocol::{accept_controller, parse_endpoint, RemoteController, TimeoutPolicy};
use crate::sim::{self, format_sig9, Controller, ControllerPort, EngineConfig, RunOutput, SimError};

/// Environment variable that redirects an external controller binding.
pub const ENDPOINT_ENV: &str = "CHIL_ENDPOINT";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Pace the engine against the wall clock.
    pub realtime: bool,
}

/// Apply command-line and environment overrides to a case.
///
/// `--controller` always selects an external binding at that address.
/// The environment endpoint only redirects a binding that is already
/// external. The case is re-validated afterwards.
pub fn apply_overrides(
    case: &mut TestCase,
    cli_endpoint: Option<&str>,
    env_endpoint: Option<&str>,
    meas_delay: Option<f64>,
) -> Result<(), TestbenchError> {
    match (cli_endpoint, env_endpoint, case.binding()) {
        (Some(ep), _, _) => case.controller = Some(ControllerBinding::External(ep.to_string())),
        (None, Some(ep), ControllerBinding::External(_)) if !ep.trim().is_empty() => {
            case.controller = Some(ControllerBinding::External(ep.to_string()))
        }
        _ => {}
    }
    if let Some(d) = meas_delay {
        case.protocol.meas_delays = Some(vec![d]);
    }
    case.validate()
}

/// Trace file name of the run with measurement delay `delay`.
pub fn trace_file_name(case: &TestCase, delay: f64) -> String {
    if case.meas_delays().len() > 1 {
        format!("trace_delay_{}s.csv", format_sig9(delay))
    } else {
        "trace.csv".to_string()
    }
}

/// Run a validated case. External bindings listen on their endpoint for
/// the controller to connect.
pub fn run_case(case: &TestCase, opts: RunOptions) -> Result<CaseOutcome, TestbenchError> {
    match case.binding() {
        ControllerBinding::External(ep) => {
            let addr = parse_endpoint(&ep).map_err(|e| TestbenchError::Validation(e.to_string()))?;
            let listener = TcpListener::bind(&addr).map_err(|e| TestbenchError::Io {
                path: addr.clone(),
                source: e,
            })?;
            run_case_with_listener(case, opts, Some(&listener))
        }
        ControllerBinding::InProcess(_) => run_case_with_listener(case, opts, None),
    }
}

/// Run a case, taking external controllers from `listener`. One controller
/// connection is accepted per engine run (one per measurement delay).
pub fn run_case_with_listener(
    case: &TestCase,
    opts: RunOptions,
    listener: Option<&TcpListener>,
) -> Result<CaseOutcome, TestbenchError> {
    let binding = case.binding();
    let mut report = TestReport {
        schema: REPORT_SCHEMA.to_string(),
        tool_version: crate::TOOL_VERSION.to_string(),
        case: case.name.clone(),
        scenario: case.scenario,
        config_hash: case.config_hash(),
        controller: binding.describe(),
        pass: false,
        error: None,
        criteria: Vec::new(),
        runs: Vec::new(),
        evidence: None,
    };
    let mut traces = Vec::new();
    let mut diverged = None;

    for &delay in case.meas_delays() {
        let label = format!("meas_delay={}s", format_sig9(delay));
        match run_once(case, opts, delay, &binding, listener) {
            Ok(out) => {
                let summary = out.controllers.first().cloned().unwrap_or_default();
                let file = trace_file_name(case, delay);
                report.runs.push(RunRecord {
                    label,
                    meas_delay_s: delay,
                    ctrl_delay_s: case.protocol.ctrl_delay,
                    rows: out.trace.len(),
                    exchanges: out.exchange_count(),
                    held_replies: summary.held_replies,
                    controller_disconnected: summary.disconnected,
                    notes: summary.notes,
                    trace_file: file.clone(),
                });
                traces.push((file, out.trace));
            }
            Err(SimError::Controller(e @ ControllerError::TuningDiverged { .. })) => {
                diverged = Some(e.to_string());
                break;
            }
            Err(e) => {
                report.error = Some(e.to_string());
                return Ok(CaseOutcome {
                    report,
                    traces,
                    extra_csv: Vec::new(),
                });
            }
        }
    }

    let refs: Vec<_> = traces.iter().map(|(_, t)| t).collect();
    let evaluation = evaluate(case, &refs, diverged.as_deref())?;
    report.pass = !evaluation.criteria.is_empty() && evaluation.criteria.iter().all(|c| c.pass);
    report.criteria = evaluation.criteria;
    report.evidence = Some(evaluation.evidence);
    Ok(CaseOutcome {
        report,
        traces,
        extra_csv: evaluation.extra_csv,
    })
}

fn run_once(
    case: &TestCase,
    opts: RunOptions,
    delay: f64,
    binding: &ControllerBinding,
    listener: Option<&TcpListener>,
) -> Result<RunOutput, SimError> {
    let mut network = build_network(case).map_err(to_sim)?;
    let dt = case.dt();
    let controller: Box<dyn Controller> = match binding {
        ControllerBinding::InProcess(_) => reference_controller(case).map_err(to_sim)?,
        ControllerBinding::External(_) => {
            let listener =
                listener.ok_or_else(|| SimError::InvalidConfig("external controller needs a listener".into()))?;
            let mut probe = network.clone();
            probe.initialize(dt)?;
            let signals = probe.measure(0, 0.0).names().map(str::to_string).collect();
            let stream = accept_controller(listener, Duration::from_secs_f64(case.protocol.accept_wait_s))?;
            let policy = TimeoutPolicy {
                timeout_s: case.protocol.timeout_s,
                action: case.protocol.action,
            };
            Box::new(RemoteController::handshake(
                binding.describe(),
                stream,
                signals,
                network.control_names(),
                policy,
            )?)
        }
    };
    let port = ControllerPort::new(controller, case.cycle_ticks())
        .with_delays(delay_ticks(delay, dt), delay_ticks(case.protocol.ctrl_delay, dt));
    let config = EngineConfig {
        dt,
        duration: case.duration(),
        decimation: case.decimation(),
        realtime: opts.realtime,
    };
    let events = case.events().iter().map(|e| e.to_event()).collect();
    sim::run(&mut network, events, config, vec![port])
}

fn to_sim(e: TestbenchError) -> SimError {
    match e {
        TestbenchError::Sim(s) => s,
        other => SimError::InvalidConfig(other.to_string()),
    }
}

/// Run independent cases on up to `workers` threads. Results keep the
/// order of `cases`.
pub fn run_batch(cases: &[TestCase], opts: RunOptions, workers: usize) -> Vec<Result<CaseOutcome, TestbenchError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<CaseOutcome, TestbenchError>>>> =
        cases.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, cases.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(case) = cases.get(i) else { break };
                let result = run_case(case, opts);
                *slots[i].lock().expect("no worker panics while holding a slot") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every case ran"))
        .collect()
}
