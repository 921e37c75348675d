use serde::{Deserialize, Serialize};

use super::{signal, ControllerError};
use crate::components::{FeederModel, TapTransformer};
use crate::sim::{ControlFrame, Controller, Reply, SignalFrame, SimError};

/// Coordinated voltage control unit settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvcuConfig {
    pub upper: f64,
    pub lower: f64,
    /// Hold further tap decisions until the measured tap position shows the
    /// previous command. Prevents repeated taps on stale measurements.
    pub confirm_taps: bool,
}

impl Default for CvcuConfig {
    fn default() -> Self {
        Self {
            upper: 1.02,
            lower: 0.94,
            confirm_taps: true,
        }
    }
}

impl CvcuConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.upper > self.lower && self.lower > 0.0 && self.upper.is_finite()) {
            return Err(ControllerError::InvalidConfig(format!(
                "voltage limits need upper > lower > 0, got {} / {}",
                self.upper, self.lower
            )));
        }
        Ok(())
    }

    pub fn band_width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Static feeder knowledge the controller works with: which buses it
/// watches, the DG capability boxes, tap range, and the reactive-power
/// sensitivities `∂|V_i|/∂Q_j`, approximated by the reactance shared by the
/// root paths of bus `i` and DG `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvcuPlant {
    pub buses: Vec<String>,
    pub dgs: Vec<String>,
    pub q_box: Vec<(f64, f64)>,
    pub sensitivity: Vec<Vec<f64>>,
    pub tap_range: (i64, i64),
}

impl CvcuPlant {
    pub fn from_feeder(feeder: &FeederModel, xfmr: &TapTransformer) -> Result<Self, ControllerError> {
        let topo = feeder
            .topology()
            .map_err(|e| ControllerError::InvalidConfig(e.to_string()))?;
        let monitored: Vec<usize> = (0..feeder.buses.len()).filter(|&i| feeder.buses[i].monitored).collect();
        let path_x = |bus: usize| -> Vec<(usize, f64)> {
            let path = topo.path_from_root(bus);
            path.iter()
                .skip(1)
                .map(|&b| {
                    let line = topo.parent_line[b].expect("non-root bus has a line");
                    (b, feeder.lines[line].x)
                })
                .collect()
        };
        let sensitivity = monitored
            .iter()
            .map(|&bus| {
                let pb = path_x(bus);
                topo.dg_bus
                    .iter()
                    .map(|&dg_bus| {
                        let pd = path_x(dg_bus);
                        pb.iter()
                            .filter(|(b, _)| pd.iter().any(|(d, _)| d == b))
                            .map(|(_, x)| x)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            buses: monitored.iter().map(|&i| feeder.buses[i].name.clone()).collect(),
            dgs: feeder.dgs.iter().map(|d| d.name.clone()).collect(),
            q_box: feeder.dgs.iter().map(|d| (d.q_min, d.q_max)).collect(),
            sensitivity,
            tap_range: (xfmr.tap_min, xfmr.tap_max),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvcuState {
    /// Reactive-power setpoint per DG (p.u.).
    pub q_set: Vec<f64>,
    /// Tap position the last command should produce, until confirmed.
    pub expected_tap: Option<i64>,
    pub taps_issued: u32,
}

impl CvcuState {
    pub fn new(q_set: Vec<f64>) -> Self {
        Self {
            q_set,
            expected_tap: None,
            taps_issued: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvcuInputs {
    /// Voltage magnitude of each monitored bus (p.u.), in plant order.
    pub voltages: Vec<f64>,
    pub tap_pos: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvcuCommand {
    /// −1, 0 or +1.
    pub tap: i64,
    pub q_set: Vec<f64>,
    pub q_changed: bool,
    /// Spread exceeds the band and cannot be reduced, or both limits are
    /// violated at once.
    pub infeasible: bool,
    /// A tap decision was withheld awaiting confirmation of the last one.
    pub blocked: bool,
}

/// One CVCU cycle: range control first, level control second.
///
/// Range control acts only when the spread exceeds the band width and takes
/// one linearized step on the DG reactive powers towards a spread equal to
/// the band width. Level control taps only on a limit violation; a cycle
/// that changed Q does not also tap unless the band is infeasible.
pub fn cvcu_step(inputs: &CvcuInputs, state: &mut CvcuState, cfg: &CvcuConfig, plant: &CvcuPlant) -> CvcuCommand {
    let mut cmd = CvcuCommand {
        tap: 0,
        q_set: state.q_set.clone(),
        q_changed: false,
        infeasible: false,
        blocked: false,
    };
    let v = &inputs.voltages;
    if v.is_empty() {
        return cmd;
    }
    let (i_min, v_min) = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc });
    let (i_max, v_max) =
        v.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
        );
    let spread = v_max - v_min;

    if spread > cfg.band_width() {
        let excess = spread - cfg.band_width();
        let grad: Vec<f64> = (0..plant.dgs.len())
            .map(|j| plant.sensitivity[i_max][j] - plant.sensitivity[i_min][j])
            .collect();
        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        if norm2 > 0.0 {
            for (j, g) in grad.iter().enumerate() {
                let (lo, hi) = plant.q_box[j];
                let target = (state.q_set[j] - excess * g / norm2).clamp(lo, hi);
                if target != state.q_set[j] {
                    cmd.q_changed = true;
                }
                cmd.q_set[j] = target;
            }
        }
        if !cmd.q_changed {
            cmd.infeasible = true;
        }
        state.q_set = cmd.q_set.clone();
    }

    let over = v_max > cfg.upper;
    let under = v_min < cfg.lower;
    if over && under {
        cmd.infeasible = true;
    }
    if cmd.q_changed && !cmd.infeasible {
        return cmd;
    }
    let wanted = if under {
        1
    } else if over {
        -1
    } else {
        0
    };
    if wanted == 0 {
        return cmd;
    }
    if let Some(expected) = state.expected_tap {
        if cfg.confirm_taps && inputs.tap_pos != expected {
            cmd.blocked = true;
            return cmd;
        }
    }
    let (tap_min, tap_max) = plant.tap_range;
    let next = inputs.tap_pos + wanted;
    if next < tap_min || next > tap_max {
        return cmd;
    }
    cmd.tap = wanted;
    state.expected_tap = Some(next);
    state.taps_issued += 1;
    cmd
}

/// In-process CVCU driven once per controller cycle.
#[derive(Debug, Clone)]
pub struct CvcuController {
    cfg: CvcuConfig,
    plant: CvcuPlant,
    state: CvcuState,
}

impl CvcuController {
    pub fn new(cfg: CvcuConfig, feeder: &FeederModel, xfmr: &TapTransformer) -> Result<Self, ControllerError> {
        cfg.validate()?;
        let plant = CvcuPlant::from_feeder(feeder, xfmr)?;
        let state = CvcuState::new(feeder.dgs.iter().map(|d| d.q).collect());
        Ok(Self { cfg, plant, state })
    }

    pub fn state(&self) -> &CvcuState {
        &self.state
    }
}

impl Controller for CvcuController {
    fn name(&self) -> &str {
        "cvcu"
    }

    fn exchange(&mut self, meas: &SignalFrame) -> Result<Reply, SimError> {
        let voltages = self
            .plant
            .buses
            .iter()
            .map(|b| signal(meas, &format!("V_{b}_pu")))
            .collect::<Result<Vec<_>, _>>()?;
        let tap_pos = signal(meas, "tap_pos")?.round() as i64;
        let cmd = cvcu_step(
            &CvcuInputs { voltages, tap_pos },
            &mut self.state,
            &self.cfg,
            &self.plant,
        );
        let mut frame = ControlFrame::new(meas.tick).with("tap_cmd", cmd.tap as f64);
        for (name, q) in self.plant.dgs.iter().zip(&cmd.q_set) {
            frame.set(format!("q_set_{name}_pu"), *q);
        }
        frame.set("status.infeasible", if cmd.infeasible { 1.0 } else { 0.0 });
        frame.set("status.blocked", if cmd.blocked { 1.0 } else { 0.0 });
        Ok(Reply::Fresh(frame))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (CvcuConfig, CvcuPlant, CvcuState) {
        let f = FeederModel::default();
        let plant = CvcuPlant::from_feeder(&f, &TapTransformer::default()).unwrap();
        (CvcuConfig::default(), plant, CvcuState::new(vec![0.0]))
    }

    fn run(v: [f64; 4], tap: i64) -> CvcuCommand {
        let (cfg, plant, mut st) = setup();
        cvcu_step(
            &CvcuInputs {
                voltages: v.to_vec(),
                tap_pos: tap,
            },
            &mut st,
            &cfg,
            &plant,
        )
    }

    #[test]
    fn sensitivities_follow_common_path() {
        let (_, plant, _) = setup();
        let col: Vec<f64> = plant.sensitivity.iter().map(|r| r[0]).collect();
        assert_eq!(col[0], 0.0);
        assert!((col[1] - 0.06).abs() < 1e-15);
        assert!((col[3] - 0.18).abs() < 1e-15);
    }

    #[test]
    fn quiescent_inside_band() {
        let c = run([1.0, 0.99, 0.98, 1.01], 0);
        assert_eq!((c.tap, c.q_changed, c.infeasible), (0, false, false));
        assert_eq!(c.q_set, vec![0.0]);
    }

    #[test]
    fn over_voltage_taps_down() {
        assert_eq!(run([1.0, 1.0, 1.01, 1.03], 0).tap, -1);
    }

    #[test]
    fn under_voltage_taps_up() {
        assert_eq!(run([1.01, 0.97, 0.95, 0.93], 0).tap, 1);
    }

    #[test]
    fn both_violated_is_infeasible_and_taps_up() {
        // spread 0.12 > 0.08 drives Q to its floor; still infeasible
        let (cfg, plant, mut st) = setup();
        st.q_set = vec![-0.3];
        let c = cvcu_step(
            &CvcuInputs {
                voltages: vec![0.93, 0.99, 1.0, 1.05],
                tap_pos: 0,
            },
            &mut st,
            &cfg,
            &plant,
        );
        assert!(c.infeasible);
        assert_eq!(c.tap, 1);
    }

    #[test]
    fn range_control_absorbs_at_high_end() {
        let c = run([1.0, 0.96, 0.95, 1.0201 + 0.05], 0);
        assert!(c.q_changed);
        assert!(c.q_set[0] < 0.0);
        assert_eq!(c.tap, 0);
    }

    #[test]
    fn waits_for_tap_confirmation() {
        let (cfg, plant, mut st) = setup();
        let over = CvcuInputs {
            voltages: vec![1.0, 1.0, 1.01, 1.03],
            tap_pos: 0,
        };
        assert_eq!(cvcu_step(&over, &mut st, &cfg, &plant).tap, -1);
        let stale = cvcu_step(&over, &mut st, &cfg, &plant);
        assert_eq!(stale.tap, 0);
        assert!(stale.blocked);
        let confirmed = CvcuInputs { tap_pos: -1, ..over };
        assert_eq!(cvcu_step(&confirmed, &mut st, &cfg, &plant).tap, -1);
    }
}
