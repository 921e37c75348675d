use std::collections::VecDeque;
use std::f64::consts::TAU;

use super::{ControlFrame, EventAction, SignalFrame, SimError};
use crate::components::{
    DcLinkState, FeederModel, GridSource, InverterAvg, PvArrayParams, PvCurve, RadialTopology, RlcLoadBank,
    TapTransformer,
};
use crate::loadflow::{self, FeederSolution};

/// PV array feeding a split DC link and an average-model inverter.
///
/// The inverter current is synchronized to the angle supplied by the
/// controller's PLL (`pll_angle`, valid for the next tick), which then
/// advances at `pll_omega` until the next control update.
#[derive(Debug, Clone)]
pub struct PvChain {
    params: PvArrayParams,
    curve: PvCurve,
    dclink: DcLinkState,
    inverter: InverterAvg,
    i_ref: (f64, f64),
    angle: Option<f64>,
    omega: Option<f64>,
    currents: [f64; 3],
    p_pv: f64,
    p_ac: f64,
}

impl PvChain {
    /// Chain at its operating point: DC link at `v_dc`, inverter current
    /// already settled at `inverter.current_dq()` and used as the reference.
    pub fn new(params: PvArrayParams, v_dc: f64, capacitance: f64, inverter: InverterAvg) -> Result<Self, SimError> {
        inverter.validate()?;
        let curve = params.curve()?;
        let dclink = DcLinkState::new(v_dc, capacitance)?;
        Ok(Self {
            i_ref: inverter.current_dq(),
            params,
            curve,
            dclink,
            inverter,
            angle: None,
            omega: None,
            currents: [0.0; 3],
            p_pv: 0.0,
            p_ac: 0.0,
        })
    }

    pub fn dclink(&self) -> &DcLinkState {
        &self.dclink
    }

    pub fn inverter(&self) -> &InverterAvg {
        &self.inverter
    }

    pub fn curve(&self) -> &PvCurve {
        &self.curve
    }

    fn set_parameter(&mut self, field: &str, value: f64) -> Result<(), SimError> {
        match field {
            "irradiance" => self.params.irradiance = value,
            "temperature" => self.params.temperature = value,
            _ => return Err(SimError::UnknownParameter(format!("pv.{field}"))),
        }
        self.curve = self.params.curve()?;
        Ok(())
    }

    fn has_parameter(field: &str) -> bool {
        matches!(field, "irradiance" | "temperature")
    }
}

/// Constant-power PV inverter in parallel with a switchable RLC load, both
/// behind the grid meter. Grid power is positive when exporting.
#[derive(Debug, Clone)]
pub struct RlcStage {
    bank: RlcLoadBank,
    p_pv: f64,
    meter: VecDeque<f64>,
    currents: [f64; 3],
    p_load: f64,
    q_load: f64,
}

impl RlcStage {
    pub fn new(bank: RlcLoadBank, p_pv: f64) -> Result<Self, SimError> {
        bank.validate()?;
        if !p_pv.is_finite() {
            return Err(SimError::InvalidConfig(format!("p_pv must be finite, got {p_pv}")));
        }
        Ok(Self {
            bank,
            p_pv,
            meter: VecDeque::new(),
            currents: [0.0; 3],
            p_load: 0.0,
            q_load: 0.0,
        })
    }

    pub fn bank(&self) -> &RlcLoadBank {
        &self.bank
    }

    /// Mean of the instantaneous grid power over the last fundamental
    /// period.
    pub fn p_grid(&self) -> f64 {
        if self.meter.is_empty() {
            return 0.0;
        }
        self.meter.iter().sum::<f64>() / self.meter.len() as f64
    }

    /// Instantaneous grid currents and power at one time instant.
    fn evaluate(&mut self, grid: &GridSource, t: f64) -> f64 {
        let v = grid.voltages(t);
        let vq = grid.quadrature(t);
        let residual = grid.residual();
        let vn = self.bank.v_nominal;
        let (g_banks, b_banks) = self
            .bank
            .banks
            .iter()
            .filter(|b| b.switched)
            .fold((0.0, 0.0), |(g, b), bank| {
                (g + bank.p / (vn * vn), b + bank.q / (vn * vn))
            });
        let g_total = g_banks + self.bank.fine_g;
        let mut p_inst = 0.0;
        for k in 0..3 {
            let u_rms = grid.u_rms_nominal * residual[k];
            let inv = if u_rms > 0.0 {
                self.p_pv / (3.0 * u_rms * u_rms) * v[k]
            } else {
                0.0
            };
            // per-phase share of the three-phase equivalent admittance
            let load = (g_total * v[k] - b_banks * vq[k]) / 3.0;
            self.currents[k] = inv - load;
            p_inst += v[k] * self.currents[k];
        }
        let u_mean = grid.u_rms_nominal * residual.iter().sum::<f64>() / 3.0;
        let (p, q) = self.bank.total_load(u_mean);
        self.p_load = p;
        self.q_load = q;
        p_inst
    }

    fn push_sample(&mut self, p_inst: f64, window: usize) {
        self.meter.push_back(p_inst);
        while self.meter.len() > window {
            self.meter.pop_front();
        }
    }
}

/// Radial feeder behind an on-load tap changer, solved every step.
#[derive(Debug, Clone)]
pub struct FeederStage {
    feeder: FeederModel,
    topo: RadialTopology,
    xfmr: TapTransformer,
    solution: Option<FeederSolution>,
    tol: f64,
    max_iter: usize,
}

impl FeederStage {
    pub fn new(feeder: FeederModel, xfmr: TapTransformer) -> Result<Self, SimError> {
        let topo = feeder.topology()?;
        xfmr.validate()?;
        Ok(Self {
            feeder,
            topo,
            xfmr,
            solution: None,
            tol: loadflow::DEFAULT_TOL,
            max_iter: loadflow::DEFAULT_MAX_ITER,
        })
    }

    pub fn feeder(&self) -> &FeederModel {
        &self.feeder
    }

    pub fn transformer(&self) -> &TapTransformer {
        &self.xfmr
    }

    pub fn solution(&self) -> Option<&FeederSolution> {
        self.solution.as_ref()
    }

    fn solve(&mut self) -> Result<(), SimError> {
        let sol = loadflow::solve_with_topology(&self.feeder, &self.topo, self.xfmr.ratio(), self.tol, self.max_iter)?;
        self.solution = Some(sol);
        Ok(())
    }

    fn measure(&self, frame: &mut SignalFrame) {
        let Some(sol) = &self.solution else { return };
        for (bus, v) in self.feeder.buses.iter().zip(&sol.voltages) {
            frame.set(format!("V_{}_pu", bus.name), v.norm());
        }
        let ext = loadflow::voltage_extrema(sol);
        frame.set("v_max_pu", ext.v_max);
        frame.set("v_min_pu", ext.v_min);
        frame.set("tap_pos", self.xfmr.clamped_tap() as f64);
        for dg in &self.feeder.dgs {
            frame.set(format!("Q_{}_pu", dg.name), dg.q);
        }
        frame.set("P_slack_pu", sol.slack_power.re);
        frame.set("Q_slack_pu", sol.slack_power.im);
    }
}

/// The simulated plant: any combination of a grid source with either a PV
/// chain or an RLC stage, or a quasi-static feeder.
#[derive(Debug, Clone, Default)]
pub struct Network {
    grid: Option<GridSource>,
    pv: Option<PvChain>,
    rlc: Option<RlcStage>,
    feeder: Option<FeederStage>,
    voltages: [f64; 3],
    meter_window: usize,
}

impl Network {
    /// Network without any sources; every signal reads 0.
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn with_grid(mut self, grid: GridSource) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_pv_chain(mut self, pv: PvChain) -> Self {
        self.pv = Some(pv);
        self
    }

    pub fn with_rlc(mut self, rlc: RlcStage) -> Self {
        self.rlc = Some(rlc);
        self
    }

    pub fn with_feeder(mut self, feeder: FeederStage) -> Self {
        self.feeder = Some(feeder);
        self
    }

    pub fn grid(&self) -> Option<&GridSource> {
        self.grid.as_ref()
    }

    pub fn pv_chain(&self) -> Option<&PvChain> {
        self.pv.as_ref()
    }

    pub fn rlc(&self) -> Option<&RlcStage> {
        self.rlc.as_ref()
    }

    pub fn feeder(&self) -> Option<&FeederStage> {
        self.feeder.as_ref()
    }

    fn check_shape(&self) -> Result<(), SimError> {
        if self.pv.is_some() && self.rlc.is_some() {
            return Err(SimError::InvalidConfig(
                "a network holds either a PV chain or an RLC stage, not both".into(),
            ));
        }
        if (self.pv.is_some() || self.rlc.is_some()) && self.grid.is_none() {
            return Err(SimError::InvalidConfig("converter stages need a grid source".into()));
        }
        Ok(())
    }

    /// Compute all outputs at `t = 0` without advancing any state. The RLC
    /// power meter is primed with one period of steady-state history.
    pub fn initialize(&mut self, dt: f64) -> Result<(), SimError> {
        self.check_shape()?;
        if let Some(grid) = &self.grid {
            self.voltages = grid.voltages(0.0);
            if let Some(pv) = &mut self.pv {
                let angle = *pv.angle.get_or_insert(grid.angle(0.0).rem_euclid(TAU));
                pv.omega.get_or_insert(TAU * grid.f0);
                pv.currents = pv.inverter.phase_currents(angle);
                pv.p_ac = dot(&self.voltages, &pv.currents);
                pv.p_pv = pv.curve.power(pv.dclink.v_dc());
            }
            if let Some(rlc) = &mut self.rlc {
                let n = crate::analysis::samples_per_period(grid.f0, dt)
                    .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
                self.meter_window = n;
                rlc.meter.clear();
                for k in (1..n).rev() {
                    let p = rlc.evaluate(grid, -(k as f64) * dt);
                    rlc.push_sample(p, n);
                }
                let p = rlc.evaluate(grid, 0.0);
                rlc.push_sample(p, n);
            }
        }
        if let Some(f) = &mut self.feeder {
            f.solve()?;
        }
        Ok(())
    }

    /// Advance every stage from `t_next − dt` to `t_next`: sources, then the
    /// converter chain, then the network solve.
    pub fn advance(&mut self, t_next: f64, dt: f64) -> Result<(), SimError> {
        if let Some(grid) = &self.grid {
            self.voltages = grid.voltages(t_next);
            if let Some(pv) = &mut self.pv {
                let angle = pv.angle.unwrap_or(0.0);
                pv.currents = pv.inverter.inverter_output(pv.i_ref, angle, dt);
                pv.p_ac = dot(&self.voltages, &pv.currents);
                let (dclink, p_pv) = pv.dclink.step_with_pv(&pv.curve, pv.p_ac, dt)?;
                pv.dclink = dclink;
                pv.p_pv = p_pv;
                pv.angle = Some((angle + pv.omega.unwrap_or(0.0) * dt).rem_euclid(TAU));
            }
            if let Some(rlc) = &mut self.rlc {
                let p = rlc.evaluate(grid, t_next);
                rlc.push_sample(p, self.meter_window.max(1));
            }
        }
        if let Some(f) = &mut self.feeder {
            f.solve()?;
        }
        Ok(())
    }

    pub fn measure(&self, tick: u64, t: f64) -> SignalFrame {
        let mut frame = SignalFrame::new(tick, t);
        if let Some(f) = &self.feeder {
            f.measure(&mut frame);
            if self.grid.is_none() {
                return frame;
            }
        }
        let currents = match (&self.pv, &self.rlc) {
            (Some(pv), _) => pv.currents,
            (None, Some(rlc)) => rlc.currents,
            (None, None) => [0.0; 3],
        };
        for k in 0..3 {
            frame.set(format!("U_L{}", k + 1), self.voltages[k]);
            frame.set(format!("I_L{}", k + 1), currents[k]);
        }
        if let Some(pv) = &self.pv {
            let v_dc = pv.dclink.v_dc();
            frame.set("V_dc", v_dc);
            frame.set("V_dc_plus", pv.dclink.v_dc_plus);
            frame.set("V_dc_minus", pv.dclink.v_dc_minus);
            frame.set("I_pv", pv.curve.current(v_dc));
            frame.set("P_pv", pv.p_pv);
            frame.set("P_ac", pv.p_ac);
        }
        if let (Some(rlc), Some(grid)) = (&self.rlc, &self.grid) {
            let residual = grid.residual();
            frame.set("V_rms", grid.u_rms_nominal * residual.iter().sum::<f64>() / 3.0);
            frame.set("P_grid", rlc.p_grid());
            frame.set("P_pv", rlc.p_pv);
            frame.set("P_load", rlc.p_load);
            frame.set("Q_load", rlc.q_load);
            frame.set("g_fine", rlc.bank.fine_g);
            for (k, b) in rlc.bank.banks.iter().enumerate() {
                frame.set(format!("bank{k}_on"), if b.switched { 1.0 } else { 0.0 });
            }
        }
        frame
    }

    pub fn apply_event(&mut self, action: &EventAction) -> Result<(), SimError> {
        match action {
            EventAction::FaultApply { residual } => {
                let grid = self
                    .grid
                    .as_mut()
                    .ok_or_else(|| SimError::InvalidConfig("fault event without a grid source".into()))?;
                grid.set_residual(*residual)?;
            }
            EventAction::FaultClear => {
                let grid = self
                    .grid
                    .as_mut()
                    .ok_or_else(|| SimError::InvalidConfig("fault event without a grid source".into()))?;
                grid.clear_fault();
            }
            EventAction::ParameterSet { path, value } => self.set_parameter(path, *value)?,
        }
        Ok(())
    }

    /// Overwrite a plant parameter addressed by a dotted path:
    /// `load.<bus>.{p,q}`, `dg.<name>.{p,q}`, `slack.v` on feeders,
    /// `pv.{irradiance,temperature}` on PV chains and `rlc.p_pv`.
    pub fn set_parameter(&mut self, path: &str, value: f64) -> Result<(), SimError> {
        if !value.is_finite() {
            return Err(SimError::InvalidConfig(format!("{path} = {value} is not finite")));
        }
        if let Some(field) = path.strip_prefix("pv.") {
            return match &mut self.pv {
                Some(pv) => pv.set_parameter(field, value),
                None => Err(SimError::UnknownParameter(path.into())),
            };
        }
        if path == "rlc.p_pv" {
            return match &mut self.rlc {
                Some(rlc) => {
                    rlc.p_pv = value;
                    Ok(())
                }
                None => Err(SimError::UnknownParameter(path.into())),
            };
        }
        match &mut self.feeder {
            Some(f) => match f.feeder.set_parameter(path, value) {
                true => Ok(()),
                false => Err(SimError::UnknownParameter(path.into())),
            },
            None => Err(SimError::UnknownParameter(path.into())),
        }
    }

    pub fn has_parameter(&self, path: &str) -> bool {
        if let Some(field) = path.strip_prefix("pv.") {
            return self.pv.is_some() && PvChain::has_parameter(field);
        }
        if path == "rlc.p_pv" {
            return self.rlc.is_some();
        }
        self.feeder.as_ref().is_some_and(|f| f.feeder.has_parameter(path))
    }

    /// Names of every control input the plant accepts.
    pub fn control_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.pv.is_some() {
            names.extend(["i_d_ref_pu", "i_q_ref_pu", "pll_angle", "pll_omega"].map(String::from));
        }
        if let Some(rlc) = &self.rlc {
            names.extend((0..rlc.bank.banks.len()).map(|k| format!("bank{k}_on")));
            names.push("g_fine".into());
        }
        if let Some(f) = &self.feeder {
            names.push("tap_cmd".into());
            names.extend(f.feeder.dgs.iter().map(|d| format!("q_set_{}_pu", d.name)));
        }
        names.sort();
        names
    }

    /// Apply one fresh control frame. Keys starting with `status.` are
    /// informational and ignored; any other unknown key is an error.
    pub fn apply_controls(&mut self, frame: &ControlFrame) -> Result<(), SimError> {
        for (name, &value) in &frame.values {
            if name.starts_with("status.") {
                continue;
            }
            if !value.is_finite() {
                return Err(SimError::InvalidConfig(format!("control {name} = {value}")));
            }
            if self.apply_control(name, value)? {
                continue;
            }
            return Err(SimError::UnknownControl(name.clone()));
        }
        Ok(())
    }

    fn apply_control(&mut self, name: &str, value: f64) -> Result<bool, SimError> {
        if let Some(pv) = &mut self.pv {
            match name {
                "i_d_ref_pu" => pv.i_ref.0 = value,
                "i_q_ref_pu" => pv.i_ref.1 = value,
                "pll_angle" => pv.angle = Some(value.rem_euclid(TAU)),
                "pll_omega" => pv.omega = Some(value),
                _ => return Ok(false),
            }
            return Ok(true);
        }
        if let Some(rlc) = &mut self.rlc {
            if name == "g_fine" {
                rlc.bank.set_fine_g(value);
                return Ok(true);
            }
            if let Some(k) = name
                .strip_prefix("bank")
                .and_then(|s| s.strip_suffix("_on"))
                .and_then(|s| s.parse::<usize>().ok())
            {
                return Ok(rlc.bank.set_switched(k, value >= 0.5));
            }
            return Ok(false);
        }
        if let Some(f) = &mut self.feeder {
            if name == "tap_cmd" {
                let delta = value.round().clamp(-1.0, 1.0) as i64;
                if delta != 0 {
                    f.xfmr.step_tap(delta);
                }
                return Ok(true);
            }
            if let Some(dg) = name.strip_prefix("q_set_").and_then(|s| s.strip_suffix("_pu")) {
                return Ok(f.feeder.set_parameter(&format!("dg.{dg}.q"), value));
            }
        }
        Ok(false)
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
