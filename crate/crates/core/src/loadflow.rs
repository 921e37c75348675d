//! Quasi-static positive-sequence radial load flow (backward/forward sweep).

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::components::{ComponentError, FeederModel, RadialTopology};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadFlowError {
    #[error(transparent)]
    Topology(#[from] ComponentError),
    #[error("tolerance must be > 0, got {0}")]
    InvalidTolerance(f64),
    #[error("load flow did not converge in {} iterations (max |dV| {:.3e})", .0.iterations, .0.last_update)]
    NotConverged(Box<FeederSolution>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederSolution {
    /// Complex bus voltages (p.u.), in feeder bus order.
    pub voltages: Vec<Complex64>,
    /// Complex current of each line in feeder line order, flowing from
    /// `from` to `to` (p.u.).
    pub line_currents: Vec<Complex64>,
    /// Complex power drawn from the upstream grid at the root (p.u.).
    pub slack_power: Complex64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest voltage update of the final sweep.
    pub last_update: f64,
    monitored: Vec<bool>,
}

impl FeederSolution {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.voltages.iter().map(|v| v.norm()).collect()
    }

    pub fn is_monitored(&self, bus: usize) -> bool {
        self.monitored[bus]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VoltageExtrema {
    pub v_min: f64,
    pub v_max: f64,
    pub spread: f64,
}

/// Solve the feeder with the root held at `slack_voltage · tap_ratio`.
///
/// On non-convergence the best iterate is returned inside the error.
pub fn solve_radial(
    feeder: &FeederModel,
    tap_ratio: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FeederSolution, LoadFlowError> {
    let topo = feeder.topology()?;
    solve_with_topology(feeder, &topo, tap_ratio, tol, max_iter)
}

/// Same as [`solve_radial`] with a topology validated beforehand, which lets
/// the engine skip re-validation every step.
pub fn solve_with_topology(
    feeder: &FeederModel,
    topo: &RadialTopology,
    tap_ratio: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FeederSolution, LoadFlowError> {
    if !(tol > 0.0) {
        return Err(LoadFlowError::InvalidTolerance(tol));
    }
    let n = feeder.buses.len();
    let demand: Vec<Complex64> = feeder
        .net_demand(topo)
        .into_iter()
        .map(|(p, q)| Complex64::new(p, q))
        .collect();
    let z: Vec<Complex64> = feeder.lines.iter().map(|l| Complex64::new(l.r, l.x)).collect();
    let v_root = Complex64::new(feeder.slack_voltage * tap_ratio, 0.0);

    let mut v = vec![v_root; n];
    // current entering each bus from its parent
    let mut branch = vec![Complex64::default(); n];
    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        // backward: leaf to root accumulation of load currents
        for &bus in topo.order.iter().rev() {
            branch[bus] = (demand[bus] / v[bus]).conj();
        }
        for &bus in topo.order.iter().skip(1).rev() {
            let parent = topo.parent[bus].expect("non-root bus has a parent");
            let child = branch[bus];
            branch[parent] += child;
        }
        // forward: root to leaf voltage drops
        last_update = 0.0;
        for &bus in topo.order.iter().skip(1) {
            let parent = topo.parent[bus].expect("non-root bus has a parent");
            let line = topo.parent_line[bus].expect("non-root bus has a line");
            let new_v = v[parent] - z[line] * branch[bus];
            last_update = last_update.max((new_v - v[bus]).norm());
            v[bus] = new_v;
        }
        if last_update < tol {
            break;
        }
    }
    let converged = last_update < tol;

    // currents consistent with the final voltages
    for &bus in topo.order.iter().rev() {
        branch[bus] = (demand[bus] / v[bus]).conj();
    }
    for &bus in topo.order.iter().skip(1).rev() {
        let parent = topo.parent[bus].expect("non-root bus has a parent");
        let child = branch[bus];
        branch[parent] += child;
    }
    let mut line_currents = vec![Complex64::default(); feeder.lines.len()];
    for bus in 1..n {
        if let Some(line) = topo.parent_line[bus] {
            line_currents[line] = branch[bus];
        }
    }
    let root = topo.order[0];
    let solution = FeederSolution {
        slack_power: v[root] * branch[root].conj(),
        voltages: v,
        line_currents,
        iterations,
        converged,
        last_update,
        monitored: feeder.buses.iter().map(|b| b.monitored).collect(),
    };
    if converged {
        Ok(solution)
    } else {
        Err(LoadFlowError::NotConverged(Box::new(solution)))
    }
}

/// Min, max and spread of the monitored bus voltage magnitudes.
///
/// Falls back to all buses when none is flagged as monitored.
pub fn voltage_extrema(solution: &FeederSolution) -> VoltageExtrema {
    let mags = solution.magnitudes();
    let any_monitored = solution.monitored.iter().any(|&m| m);
    let (v_min, v_max) = mags
        .iter()
        .enumerate()
        .filter(|&(i, _)| !any_monitored || solution.monitored[i])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &m)| {
            (lo.min(m), hi.max(m))
        });
    VoltageExtrema {
        v_min,
        v_max,
        spread: v_max - v_min,
    }
}

/// `slack injection − (Σ net demand + Σ line losses)`, complex p.u.
pub fn power_balance_residual(feeder: &FeederModel, solution: &FeederSolution) -> Result<Complex64, LoadFlowError> {
    let topo = feeder.topology()?;
    let demand: Complex64 = feeder
        .net_demand(&topo)
        .into_iter()
        .map(|(p, q)| Complex64::new(p, q))
        .sum();
    let losses: Complex64 = feeder
        .lines
        .iter()
        .zip(&solution.line_currents)
        .map(|(l, i)| Complex64::new(l.r, l.x) * i.norm_sqr())
        .sum();
    Ok(solution.slack_power - demand - losses)
}
