use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Closed acceptance band `[lower, upper]`.
///
/// `tolerance` widens the band symmetrically to absorb floating-point
/// rounding of quantities that sit exactly on a limit (for example a
/// current held at its saturation value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
}

impl Band {
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;

    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            tolerance: Self::DEFAULT_TOLERANCE,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower - self.tolerance && value <= self.upper + self.tolerance
    }

    /// Distance outside the band; zero when inside.
    fn excess(&self, value: f64) -> f64 {
        if value > self.upper {
            value - self.upper
        } else if value < self.lower {
            self.lower - value
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t_start: f64,
    pub t_end: f64,
    /// Sample farthest outside the band during this excursion.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandVerdict {
    pub pass: bool,
    pub violations: Vec<Violation>,
    /// True when settle windows were applied to the evaluation.
    pub settle_honored: bool,
    /// `[start, end)` intervals excluded from the verdict.
    pub settle_windows: Vec<(f64, f64)>,
    pub samples_checked: usize,
}

/// Check that `values` stays inside `band`, ignoring samples that fall
/// within `settle` seconds after any of `event_times`.
///
/// A violation is a maximal run of consecutive out-of-band samples that are
/// subject to evaluation.
pub fn band_check(
    times: &[f64],
    values: &[f64],
    band: Band,
    settle: f64,
    event_times: &[f64],
) -> Result<BandVerdict, AnalysisError> {
    if times.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    if times.len() != values.len() {
        return Err(AnalysisError::InvalidArgument(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if band.upper <= band.lower {
        return Err(AnalysisError::InvalidArgument(format!(
            "upper {} must exceed lower {}",
            band.upper, band.lower
        )));
    }
    if !(settle >= 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("settle {settle} < 0")));
    }
    let settle_windows: Vec<(f64, f64)> = event_times.iter().map(|&e| (e, e + settle)).collect();
    let in_settle = |t: f64| settle_windows.iter().any(|&(a, b)| t >= a && t < b);

    let mut violations = Vec::new();
    let mut open: Option<Violation> = None;
    let mut checked = 0;
    for (&t, &v) in times.iter().zip(values) {
        if in_settle(t) {
            violations.extend(open.take());
            continue;
        }
        checked += 1;
        if band.contains(v) {
            violations.extend(open.take());
            continue;
        }
        match open.as_mut() {
            Some(run) => {
                run.t_end = t;
                if band.excess(v) > band.excess(run.worst) || v.is_nan() {
                    run.worst = v;
                }
            }
            None => {
                open = Some(Violation {
                    t_start: t,
                    t_end: t,
                    worst: v,
                })
            }
        }
    }
    violations.extend(open);
    Ok(BandVerdict {
        pass: violations.is_empty(),
        violations,
        settle_honored: !settle_windows.is_empty() && settle > 0.0,
        settle_windows,
        samples_checked: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn constant_passes() {
        let t = grid(100, 0.01);
        let v = vec![1.0; 100];
        let verdict = band_check(&t, &v, Band::new(0.9, 1.2), 0.06, &[]).unwrap();
        assert!(verdict.pass);
        assert_eq!(verdict.samples_checked, 100);
    }

    #[test]
    fn excursion_outside_settle_fails_once() {
        let t = grid(100, 0.01);
        let mut v = vec![1.0; 100];
        v[50] = 1.25;
        v[51] = 1.22;
        let verdict = band_check(&t, &v, Band::new(0.9, 1.2), 0.06, &[0.2]).unwrap();
        assert!(!verdict.pass);
        assert_eq!(verdict.violations.len(), 1);
        let viol = &verdict.violations[0];
        assert_eq!((viol.t_start, viol.t_end, viol.worst), (0.5, 0.51, 1.25));
    }

    #[test]
    fn excursion_inside_settle_passes() {
        let t = grid(100, 0.01);
        let mut v = vec![1.0; 100];
        for x in &mut v[20..25] {
            *x = 0.5;
        }
        let verdict = band_check(&t, &v, Band::new(0.9, 1.2), 0.06, &[0.2]).unwrap();
        assert!(verdict.pass);
        assert!(verdict.settle_honored);
        assert_eq!(verdict.samples_checked, 94);
    }

    #[test]
    fn empty_series() {
        assert_eq!(
            band_check(&[], &[], Band::new(0.9, 1.2), 0.0, &[]),
            Err(AnalysisError::EmptySeries)
        );
    }

    #[test]
    fn tolerance_absorbs_rounding_only() {
        let band = Band::new(0.9, 1.2);
        assert!(band.contains(1.2 + 1e-12));
        assert!(!band.contains(1.2 + 1e-5));
    }
}
