//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the analysis or load-flow modules.
#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use chil_rig::components::FeederModel;
use chil_rig::sim::Trace;
use chil_rig::testbench::{parse_testcase, TestCase};
use num_complex::Complex64;

pub fn case(text: &str) -> TestCase {
    parse_testcase(text).expect("shipped case parses")
}

/// Plain DFT of one period, RMS scaled.
pub fn dft_rms(x: &[f64], h: usize) -> Complex64 {
    let n = x.len() as f64;
    let sum: Complex64 = x
        .iter()
        .enumerate()
        .map(|(k, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (h * k) as f64 / n))
        .sum();
    sum * (2f64.sqrt() / n)
}

pub fn positive_sequence(a: Complex64, b: Complex64, c: Complex64) -> Complex64 {
    let r = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    (a + r * b + r * r * c) / 3.0
}

/// Positive-sequence current magnitude over every full one-period window
/// ending at row `k`, for `k >= n - 1`. Returns (time, value) pairs.
pub fn positive_sequence_series(trace: &Trace, n: usize, i_base: f64) -> Vec<(f64, f64)> {
    let cols: Vec<Vec<f64>> = (1..=3).map(|p| trace.column(&format!("I_L{p}")).unwrap()).collect();
    let times = trace.times();
    (n - 1..times.len())
        .map(|k| {
            let ph: Vec<Complex64> = cols.iter().map(|c| dft_rms(&c[k + 1 - n..=k], 1)).collect();
            (times[k], positive_sequence(ph[0], ph[1], ph[2]).norm() / i_base)
        })
        .collect()
}

/// Dense complex linear solve by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let d = f * a[col][k];
                a[row][k] -= d;
            }
            let d = f * b[col];
            b[row] -= d;
        }
    }
    let mut x = vec![Complex64::default(); n];
    for row in (0..n).rev() {
        let s: Complex64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Nodal fixed point: bus admittance matrix, slack at bus 0, every other
/// bus a constant-power injection. Iterates
/// `V_L ← Y_LL⁻¹ (conj(−S_L / V_L) − Y_L0 V_0)` until the update is below
/// 1e-13.
pub fn nodal_oracle(feeder: &FeederModel, tap_ratio: f64) -> Vec<Complex64> {
    let n = feeder.buses.len();
    let idx = |name: &str| feeder.buses.iter().position(|b| b.name == name).unwrap();
    let mut y = vec![vec![Complex64::default(); n]; n];
    for l in &feeder.lines {
        let (i, j) = (idx(&l.from), idx(&l.to));
        let yl = Complex64::new(1.0, 0.0) / Complex64::new(l.r, l.x);
        y[i][i] += yl;
        y[j][j] += yl;
        y[i][j] -= yl;
        y[j][i] -= yl;
    }
    let mut s: Vec<Complex64> = feeder.buses.iter().map(|b| Complex64::new(b.p, b.q)).collect();
    for dg in &feeder.dgs {
        s[idx(&dg.bus)] -= Complex64::new(dg.p, dg.q);
    }
    let v0 = Complex64::new(feeder.slack_voltage * tap_ratio, 0.0);
    let y_ll: Vec<Vec<Complex64>> = (1..n).map(|i| (1..n).map(|j| y[i][j]).collect()).collect();
    let mut v = vec![v0; n];
    for _ in 0..10_000 {
        let rhs: Vec<Complex64> = (1..n).map(|i| (-s[i] / v[i]).conj() - y[i][0] * v0).collect();
        let next = solve_dense(y_ll.clone(), rhs);
        let delta = (1..n).map(|i| (next[i - 1] - v[i]).norm()).fold(0.0, f64::max);
        v[1..].copy_from_slice(&next);
        if delta < 1e-13 {
            break;
        }
    }
    v
}

/// Contiguous time above `limit` starting with the first exceeding sample
/// at or after `t_from`, measured to the first sample back at or below.
pub fn time_above(times: &[f64], values: &[f64], limit: f64, t_from: f64) -> f64 {
    let start = (0..times.len()).find(|&k| times[k] >= t_from - 1e-9 && values[k] > limit);
    match start {
        None => 0.0,
        Some(a) => match (a..times.len()).find(|&k| values[k] <= limit) {
            Some(b) => times[b] - times[a],
            None => times[times.len() - 1] + (times[1] - times[0]) - times[a],
        },
    }
}
