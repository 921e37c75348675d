use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::case::Scenario;
use super::TestbenchError;
use crate::analysis::BandVerdict;
use crate::sim::Trace;

/// Discriminator of report.json.
pub const REPORT_SCHEMA: &str = "chil-rig-report/v1";

/// One evaluated requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub description: String,
    pub measured: Option<f64>,
    pub limit: String,
    pub pass: bool,
}

impl Criterion {
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        measured: Option<f64>,
        limit: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            measured,
            limit: limit.into(),
            pass,
        }
    }
}

/// One engine run of the case (the CVCU scenario runs once per delay).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub meas_delay_s: f64,
    pub ctrl_delay_s: f64,
    pub rows: usize,
    pub exchanges: usize,
    pub held_replies: u64,
    pub controller_disconnected: bool,
    pub notes: Vec<String>,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThdWindow {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
    /// Largest THD over the three phase voltages; `None` when a phase has
    /// no fundamental to refer to.
    pub thd_u: Option<f64>,
    /// Largest THD over the three phase currents.
    pub thd_i: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvrtEvidence {
    pub band: BandVerdict,
    pub i_b1_pre_fault: Option<f64>,
    pub i_b1_in_fault: Option<f64>,
    pub i_b1_max_evaluated: f64,
    pub rise_time_s: Option<f64>,
    pub rise_target_pu: f64,
    pub thd: Vec<ThdWindow>,
    pub max_phase_current_a: f64,
    pub phase_current_limit_a: f64,
    /// Window of the context evidence file around the first fault start.
    pub context_window: Option<(f64, f64)>,
    pub context_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub t_event: f64,
    /// First sample above the upper limit, if any.
    pub t_start: Option<f64>,
    /// First sample back at or below the limit, if it returned.
    pub t_end: Option<f64>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapChange {
    pub t: f64,
    pub from: i64,
    pub to: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvcuRunEvidence {
    pub meas_delay_s: f64,
    pub disturbances: Vec<Disturbance>,
    pub taps: Vec<TapChange>,
    pub final_v_min: f64,
    pub final_v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvcuEvidence {
    pub runs: Vec<CvcuRunEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerStep {
    pub step: u32,
    pub t: f64,
    pub p_grid_w: f64,
    /// `switch`, `fine`, `done`, `none` or `pending`.
    pub action: String,
    pub banks_on: Vec<bool>,
    pub g_fine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlcEvidence {
    pub p_reference_w: f64,
    pub tolerance_w: f64,
    pub window_samples: usize,
    pub trajectory: Vec<TunerStep>,
    pub coarse_end_w: Option<f64>,
    pub final_p_grid_w: f64,
    pub steps_to_done: Option<u32>,
    pub diverged: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "lowercase")]
pub enum Evidence {
    Lvrt(LvrtEvidence),
    Cvcu(CvcuEvidence),
    Rlctune(RlcEvidence),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema: String,
    pub tool_version: String,
    pub case: String,
    pub scenario: Scenario,
    pub config_hash: String,
    pub controller: String,
    pub pass: bool,
    /// Set when the run could not be executed to the end.
    pub error: Option<String>,
    pub criteria: Vec<Criterion>,
    pub runs: Vec<RunRecord>,
    pub evidence: Option<Evidence>,
}

impl TestReport {
    /// 0 when every criterion passes, 1 on any failed criterion, 2 when the
    /// run itself failed.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            2
        } else if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, TestbenchError> {
        serde_json::from_str(text).map_err(|e| TestbenchError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Plain-text summary with a verdict table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "CHIL test report");
        let _ = writeln!(out, "================");
        let _ = writeln!(out, "case         {}", self.case);
        let _ = writeln!(out, "scenario     {}", self.scenario.as_str());
        let _ = writeln!(out, "controller   {}", self.controller);
        let _ = writeln!(out, "config hash  {}", self.config_hash);
        let _ = writeln!(out, "tool version {}", self.tool_version);
        let _ = writeln!(out);
        if let Some(err) = &self.error {
            let _ = writeln!(out, "EXECUTION ERROR: {err}");
            let _ = writeln!(out);
        }
        let id_w = self.criteria.iter().map(|c| c.id.len()).max().unwrap_or(2).max(9);
        let _ = writeln!(
            out,
            "{:<id_w$}  {:<7} {:>14}  limit",
            "criterion", "verdict", "measured"
        );
        let _ = writeln!(out, "{}", "-".repeat(id_w + 40));
        for c in &self.criteria {
            let measured = c.measured.map(|m| format!("{m:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<id_w$}  {:<7} {:>14}  {}",
                c.id,
                verdict(c.pass),
                measured,
                c.limit
            );
            let _ = writeln!(out, "{:<id_w$}    {}", "", c.description);
        }
        let _ = writeln!(out);
        for r in &self.runs {
            let _ = writeln!(
                out,
                "run {}: {} rows, {} exchanges, {} held replies, trace {}",
                r.label, r.rows, r.exchanges, r.held_replies, r.trace_file
            );
            for n in &r.notes {
                let _ = writeln!(out, "  note: {n}");
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "OVERALL: {}", verdict(self.pass));
        out
    }
}

/// Output format selection for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub txt: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            json: true,
            csv: true,
            txt: true,
        }
    }
}

impl Formats {
    /// Parse a comma-separated list such as `json,csv`.
    pub fn parse(list: &str) -> Result<Self, TestbenchError> {
        let mut f = Formats {
            json: false,
            csv: false,
            txt: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "json" => f.json = true,
                "csv" => f.csv = true,
                "txt" => f.txt = true,
                other => return Err(TestbenchError::Validation(format!("unknown report format `{other}`"))),
            }
        }
        Ok(f)
    }
}

/// A finished case: report plus the evidence files it refers to.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub report: TestReport,
    /// Trace of each run, named as in [`RunRecord::trace_file`].
    pub traces: Vec<(String, Trace)>,
    /// Further CSV evidence (file name, contents).
    pub extra_csv: Vec<(String, String)>,
}

/// Write report.json, report.txt and the CSV evidence into `out_dir`.
pub fn emit_report(
    outcome: &CaseOutcome,
    formats: Formats,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, TestbenchError> {
    let dir = out_dir.as_ref();
    let io = |p: &Path, e: std::io::Error| TestbenchError::Io {
        path: p.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files: Vec<(String, String)> = Vec::new();
    if formats.json {
        files.push(("report.json".into(), outcome.report.to_json()));
    }
    if formats.txt {
        files.push(("report.txt".into(), outcome.report.to_text()));
    }
    if formats.csv {
        files.extend(outcome.traces.iter().map(|(name, t)| (name.clone(), t.to_csv())));
        files.extend(outcome.extra_csv.iter().cloned());
    }
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
