//! Test cases, the runner that executes them and the reports they produce.
//!
//! A case is a JSON document naming a scenario, its plant, the controller
//! binding and the events. Running it yields a [`TestReport`] whose
//! verdicts are derived from the recorded traces only.

mod case;
mod report;
mod runner;
mod scenario;

pub use case::{
    load_testcase, parse_testcase, ControllerBinding, CvcuEvaluation, CvcuSection, DcLinkSpec, DurationLimit,
    EventSpec, GridSpec, LvrtEvaluation, LvrtSection, ProtocolSettings, RlcEvaluation, RlcSection, Scenario, TestCase,
    CASE_SCHEMA,
};
pub use report::{
    emit_report, CaseOutcome, Criterion, CvcuEvidence, CvcuRunEvidence, Disturbance, Evidence, Formats, LvrtEvidence,
    RlcEvidence, RunRecord, TapChange, TestReport, ThdWindow, TunerStep, REPORT_SCHEMA,
};
pub use runner::{
    apply_overrides, run_batch, run_case, run_case_with_listener, trace_file_name, RunOptions, ENDPOINT_ENV,
};
pub use scenario::{build_network, evaluate, reference_controller, scenario_controller, Evaluation};

use thiserror::Error;

use crate::components::ComponentError;
use crate::controllers::ControllerError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum TestbenchError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid test case: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl From<ComponentError> for TestbenchError {
    fn from(e: ComponentError) -> Self {
        TestbenchError::Validation(e.to_string())
    }
}

impl From<ControllerError> for TestbenchError {
    fn from(e: ControllerError) -> Self {
        TestbenchError::Validation(e.to_string())
    }
}

/// The shipped demonstration case of a scenario, as JSON text.
pub fn demo_case(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::Lvrt => include_str!("../../cases/lvrt.json"),
        Scenario::Cvcu => include_str!("../../cases/cvcu.json"),
        Scenario::Rlctune => include_str!("../../cases/rlctune.json"),
    }
}

/// A case with a deliberately broken controller, for checking that the
/// current-limit verdict fails.
pub const LVRT_FAULT_INJECTION: &str = include_str!("../../cases/lvrt_fault_injection.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_cases_parse() {
        for s in Scenario::ALL {
            let case = parse_testcase(demo_case(s)).unwrap();
            assert_eq!(case.scenario, s);
        }
        parse_testcase(LVRT_FAULT_INJECTION).unwrap();
    }
}
