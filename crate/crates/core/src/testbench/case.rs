use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TestbenchError;
use crate::components::{FeederModel, InverterAvg, PvArrayParams, RlcLoadBank, TapTransformer};
use crate::controllers::{CvcuConfig, LvrtConfig, TunerConfig};
use crate::protocol::{parse_endpoint, TimeoutAction};
use crate::sim::{ticks_for, Event, EventAction};

/// Discriminator every case file must carry.
pub const CASE_SCHEMA: &str = "chil-rig/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Lvrt,
    Cvcu,
    Rlctune,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Lvrt, Scenario::Cvcu, Scenario::Rlctune];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Lvrt => "lvrt",
            Scenario::Cvcu => "cvcu",
            Scenario::Rlctune => "rlctune",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

/// Who answers the measurement frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerBinding {
    /// A reference controller by name: the scenario name, or `echo`.
    InProcess(String),
    /// Listen on this endpoint (`tcp:HOST:PORT`) for an external
    /// controller speaking the lockstep protocol.
    External(String),
}

impl ControllerBinding {
    pub fn describe(&self) -> String {
        match self {
            ControllerBinding::InProcess(name) => format!("in-process:{name}"),
            ControllerBinding::External(ep) => format!("external:{ep}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSettings {
    /// Wall-clock seconds to wait for each reply of an external controller.
    pub timeout_s: f64,
    pub action: TimeoutAction,
    /// Wall-clock seconds to wait for an external controller to connect.
    pub accept_wait_s: f64,
    /// Measurement-path delays (s); the scenario is run once per entry.
    pub meas_delays: Option<Vec<f64>>,
    /// Command-path delay (s).
    pub ctrl_delay: f64,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            timeout_s: 5.0,
            action: TimeoutAction::HoldLastValue,
            accept_wait_s: 30.0,
            meas_delays: None,
            ctrl_delay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    FaultApply { t: f64, residual: [f64; 3] },
    FaultClear { t: f64 },
    Set { t: f64, path: String, value: f64 },
}

impl EventSpec {
    pub fn t(&self) -> f64 {
        match self {
            EventSpec::FaultApply { t, .. } | EventSpec::FaultClear { t } | EventSpec::Set { t, .. } => *t,
        }
    }

    pub fn to_event(&self) -> Event {
        let action = match self {
            EventSpec::FaultApply { residual, .. } => EventAction::FaultApply { residual: *residual },
            EventSpec::FaultClear { .. } => EventAction::FaultClear,
            EventSpec::Set { path, value, .. } => EventAction::ParameterSet {
                path: path.clone(),
                value: *value,
            },
        };
        Event::new(self.t(), action)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Line-to-neutral RMS voltage (V).
    pub u_rms: f64,
    pub f0: f64,
    pub phase_offset: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            u_rms: 230.0,
            f0: 50.0,
            phase_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DcLinkSpec {
    pub capacitance: f64,
    /// Initial DC voltage; the PV maximum power voltage when absent.
    pub v_dc: Option<f64>,
}

impl Default for DcLinkSpec {
    fn default() -> Self {
        Self {
            capacitance: 2e-3,
            v_dc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LvrtEvaluation {
    /// Band for the normalized positive-sequence current (p.u.).
    pub lower: f64,
    pub upper: f64,
    /// Seconds after each fault edge excluded from the band check.
    pub settle: f64,
    /// Seconds of evidence kept before and after the fault start.
    pub context: f64,
    pub rise_low: f64,
    pub rise_high: f64,
    pub rise_limit: f64,
    /// Reactive current the grid code asks for per p.u. of voltage dip;
    /// sets the rise-time target independently of the controller gain.
    pub required_k: f64,
    pub thd_harmonics: usize,
    pub thd_limit: f64,
    /// Slack on the peak phase current limit (A).
    pub current_margin: f64,
}

impl Default for LvrtEvaluation {
    fn default() -> Self {
        Self {
            lower: 0.9,
            upper: 1.2,
            settle: 0.06,
            context: 0.1,
            rise_low: 0.1,
            rise_high: 0.9,
            rise_limit: 0.03,
            required_k: 2.0,
            thd_harmonics: 40,
            thd_limit: 0.05,
            current_margin: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LvrtSection {
    pub grid: GridSpec,
    pub pv: PvArrayParams,
    pub dc_link: DcLinkSpec,
    pub inverter: InverterAvg,
    pub controller: LvrtConfig,
    pub evaluation: LvrtEvaluation,
}

/// Accepted over-voltage duration for runs with a given measurement delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationLimit {
    pub meas_delay: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvcuEvaluation {
    pub duration_limits: Vec<DurationLimit>,
}

impl Default for CvcuEvaluation {
    fn default() -> Self {
        Self {
            duration_limits: vec![
                DurationLimit {
                    meas_delay: 0.0,
                    min: 0.0,
                    max: 15.0,
                },
                DurationLimit {
                    meas_delay: 60.0,
                    min: 45.0,
                    max: 70.0,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvcuSection {
    pub feeder: FeederModel,
    pub transformer: TapTransformer,
    pub controller: CvcuConfig,
    pub evaluation: CvcuEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlcEvaluation {
    /// Largest grid power accepted when the coarse phase ends (W).
    pub coarse_max: f64,
    /// Tuner invocations allowed up to and including the one reaching Done.
    pub max_steps: u32,
}

impl Default for RlcEvaluation {
    fn default() -> Self {
        Self {
            coarse_max: 600.0,
            max_steps: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlcSection {
    pub grid: GridSpec,
    /// Active power of the PV inverter (W).
    pub p_pv: f64,
    pub bank: RlcLoadBank,
    pub controller: TunerConfig,
    pub evaluation: RlcEvaluation,
}

impl Default for RlcSection {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            p_pv: 5800.0,
            bank: RlcLoadBank::default(),
            controller: TunerConfig::default(),
            evaluation: RlcEvaluation::default(),
        }
    }
}

impl RlcSection {
    pub fn p_reference(&self) -> f64 {
        self.controller.p_reference.unwrap_or(self.p_pv)
    }
}

/// A declarative test case. Optional fields take scenario defaults when
/// the case is loaded; a loaded case has every option filled in, which is
/// the form the config hash is computed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestCase {
    pub schema: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scenario: Scenario,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub decimation: Option<u64>,
    #[serde(default)]
    pub controller: Option<ControllerBinding>,
    #[serde(default)]
    pub controller_cycle: Option<f64>,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    #[serde(default)]
    pub events: Option<Vec<EventSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lvrt: Option<LvrtSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvcu: Option<CvcuSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rlctune: Option<RlcSection>,
}

impl TestCase {
    /// A case with nothing but the scenario defaults.
    pub fn with_defaults(name: impl Into<String>, scenario: Scenario) -> Self {
        let mut case = Self {
            schema: CASE_SCHEMA.into(),
            name: name.into(),
            description: String::new(),
            scenario,
            dt: None,
            duration: None,
            decimation: None,
            controller: None,
            controller_cycle: None,
            protocol: ProtocolSettings::default(),
            events: None,
            lvrt: None,
            cvcu: None,
            rlctune: None,
        };
        case.fill_defaults();
        case
    }

    /// Fill every unset option with its scenario default.
    pub fn fill_defaults(&mut self) {
        let dt = *self.dt.get_or_insert(match self.scenario {
            Scenario::Lvrt => 50e-6,
            Scenario::Cvcu => 0.1,
            Scenario::Rlctune => 1e-3,
        });
        self.duration.get_or_insert(match self.scenario {
            Scenario::Lvrt => 0.6,
            Scenario::Cvcu => 300.0,
            Scenario::Rlctune => 1.0,
        });
        self.decimation.get_or_insert(1);
        self.controller
            .get_or_insert_with(|| ControllerBinding::InProcess(self.scenario.as_str().into()));
        self.controller_cycle.get_or_insert(match self.scenario {
            Scenario::Lvrt => dt,
            Scenario::Cvcu => 7.5,
            Scenario::Rlctune => 0.1,
        });
        self.protocol.meas_delays.get_or_insert_with(|| match self.scenario {
            Scenario::Cvcu => vec![0.0, 60.0],
            _ => vec![0.0],
        });
        self.events.get_or_insert_with(|| default_events(self.scenario));
        match self.scenario {
            Scenario::Lvrt => {
                self.lvrt.get_or_insert_with(Default::default);
            }
            Scenario::Cvcu => {
                self.cvcu.get_or_insert_with(Default::default);
            }
            Scenario::Rlctune => {
                self.rlctune.get_or_insert_with(Default::default);
            }
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(f64::NAN)
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or(f64::NAN)
    }

    pub fn decimation(&self) -> u64 {
        self.decimation.unwrap_or(1)
    }

    pub fn cycle_ticks(&self) -> u64 {
        self.controller_cycle.and_then(|c| ticks_for(c, self.dt())).unwrap_or(0)
    }

    pub fn meas_delays(&self) -> &[f64] {
        self.protocol.meas_delays.as_deref().unwrap_or(&[])
    }

    pub fn events(&self) -> &[EventSpec] {
        self.events.as_deref().unwrap_or(&[])
    }

    pub fn binding(&self) -> ControllerBinding {
        self.controller
            .clone()
            .unwrap_or_else(|| ControllerBinding::InProcess(self.scenario.as_str().into()))
    }

    /// Times of the fault-apply and fault-clear events.
    pub fn fault_edges(&self) -> Vec<f64> {
        self.events()
            .iter()
            .filter(|e| !matches!(e, EventSpec::Set { .. }))
            .map(EventSpec::t)
            .collect()
    }

    /// SHA-256 over the canonical JSON of the case with defaults filled.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.fill_defaults();
        let bytes = serde_json::to_vec(&canonical).expect("test cases always serialize");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("test cases always serialize");
        s.push('\n');
        s
    }

    /// Check every invariant a runnable case must satisfy.
    pub fn validate(&self) -> Result<(), TestbenchError> {
        let fail = |msg: String| Err(TestbenchError::Validation(msg));
        if self.schema != CASE_SCHEMA {
            return fail(format!("schema must be \"{CASE_SCHEMA}\", got \"{}\"", self.schema));
        }
        if self.name.trim().is_empty() {
            return fail("name must not be empty".into());
        }
        let dt = self.dt();
        if !(dt.is_finite() && dt > 0.0) {
            return fail(format!("dt must be finite and > 0, got {dt}"));
        }
        let duration = self.duration();
        if !(duration.is_finite() && duration >= 0.0) {
            return fail(format!("duration must be >= 0, got {duration}"));
        }
        let decimation = self.decimation();
        if decimation == 0 {
            return fail("decimation must be >= 1".into());
        }
        let cycle = self.controller_cycle.unwrap_or(f64::NAN);
        if self.cycle_ticks() == 0 {
            return fail(format!(
                "controller_cycle {cycle} s must be a positive integer multiple of dt {dt} s"
            ));
        }
        for &d in self.meas_delays() {
            if ticks_for(d, dt).is_none() || d < 0.0 {
                return fail(format!(
                    "meas delay {d} s must be a non-negative integer multiple of dt"
                ));
            }
        }
        if self.meas_delays().is_empty() {
            return fail("meas_delays must name at least one delay".into());
        }
        if ticks_for(self.protocol.ctrl_delay, dt).is_none() {
            return fail(format!(
                "ctrl_delay {} s must be a non-negative integer multiple of dt",
                self.protocol.ctrl_delay
            ));
        }
        if !(self.protocol.timeout_s > 0.0 && self.protocol.accept_wait_s > 0.0) {
            return fail("protocol timeout_s and accept_wait_s must be > 0".into());
        }
        match self.binding() {
            ControllerBinding::InProcess(name) => {
                if name != self.scenario.as_str() && name != "echo" {
                    return fail(format!(
                        "in-process controller `{name}` does not fit scenario {} (use `{}` or `echo`)",
                        self.scenario.as_str(),
                        self.scenario.as_str()
                    ));
                }
            }
            ControllerBinding::External(ep) => {
                parse_endpoint(&ep).map_err(|e| TestbenchError::Validation(e.to_string()))?;
            }
        }
        for ev in self.events() {
            let t = ev.t();
            if !(t.is_finite() && (0.0..=duration).contains(&t)) {
                return fail(format!("event at t={t} lies outside [0, {duration}]"));
            }
            if let EventSpec::FaultApply { residual, .. } = ev {
                if residual.iter().any(|r| !(0.0..=1.5).contains(r)) {
                    return fail(format!("fault residual {residual:?} outside [0, 1.5]"));
                }
            }
        }
        let others = [
            (Scenario::Lvrt, self.lvrt.is_some()),
            (Scenario::Cvcu, self.cvcu.is_some()),
            (Scenario::Rlctune, self.rlctune.is_some()),
        ];
        if let Some((s, _)) = others.iter().find(|(s, present)| *present && *s != self.scenario) {
            return fail(format!(
                "section `{}` does not belong to a {} case",
                s.as_str(),
                self.scenario.as_str()
            ));
        }
        super::scenario::validate_plant(self)
    }
}

fn default_events(scenario: Scenario) -> Vec<EventSpec> {
    match scenario {
        // tool default dip: 5 % residual on all phases for 150 ms
        Scenario::Lvrt => vec![
            EventSpec::FaultApply {
                t: 0.2,
                residual: [0.05; 3],
            },
            EventSpec::FaultClear { t: 0.35 },
        ],
        // load drop at the middle of the feeder: reverse flow from dg3
        // lifts the far end above the upper limit
        Scenario::Cvcu => [
            ("load.b2.p", 0.05),
            ("load.b2.q", 0.0),
            ("load.b3.p", 0.0),
            ("load.b3.q", 0.0),
        ]
        .into_iter()
        .map(|(path, value)| EventSpec::Set {
            t: 30.0,
            path: path.into(),
            value,
        })
        .collect(),
        Scenario::Rlctune => Vec::new(),
    }
}

/// Parse a case from JSON text, fill defaults and validate.
pub fn parse_testcase(text: &str) -> Result<TestCase, TestbenchError> {
    let mut case: TestCase = serde_json::from_str(text).map_err(|e| TestbenchError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    case.fill_defaults();
    case.validate()?;
    Ok(case)
}

pub fn load_testcase(path: impl AsRef<Path>) -> Result<TestCase, TestbenchError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| TestbenchError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_testcase(&text)
}
