use super::phasor::{project_periods, samples_per_period};
use super::AnalysisError;

/// Total harmonic distortion `√(Σ_{h=2..n} |X_h|²) / |X_1|`.
///
/// Uses the largest whole number of fundamental periods contained in the
/// window, projecting each harmonic with the same single-bin DFT as the
/// fundamental phasor.
pub fn thd(window: &[f64], f0: f64, dt: f64, n_harmonics: usize) -> Result<f64, AnalysisError> {
    let n = samples_per_period(f0, dt)?;
    if window.len() < n {
        return Err(AnalysisError::WindowTooShort {
            needed: n,
            got: window.len(),
        });
    }
    if n_harmonics < 2 {
        return Err(AnalysisError::InvalidArgument("n_harmonics must be at least 2".into()));
    }
    if 2 * n_harmonics >= n {
        return Err(AnalysisError::NyquistViolation {
            harmonic: n_harmonics,
            samples_per_period: n,
        });
    }
    let periods = window.len() / n;
    let fundamental = project_periods(window, 1, n, periods).norm();
    let harmonic_sq: f64 = (2..=n_harmonics)
        .map(|h| project_periods(window, h, n, periods).norm_sqr())
        .sum();
    Ok(harmonic_sq.sqrt() / fundamental)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pure_sine() {
        let dt = 1e-4;
        let x: Vec<f64> = (0..400).map(|k| (2.0 * PI * 50.0 * k as f64 * dt).sin()).collect();
        assert!(thd(&x, 50.0, dt, 20).unwrap() < 1e-9);
    }

    #[test]
    fn ten_percent_third() {
        let dt = 1e-4;
        let x: Vec<f64> = (0..200)
            .map(|k| {
                let w = 2.0 * PI * 50.0 * k as f64 * dt;
                w.sin() + 0.1 * (3.0 * w + 0.4).sin()
            })
            .collect();
        assert!((thd(&x, 50.0, dt, 20).unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn argument_checks() {
        let x = vec![0.0; 100];
        assert!(matches!(
            thd(&x, 50.0, 1e-4, 20),
            Err(AnalysisError::WindowTooShort { .. })
        ));
        let x = vec![0.0; 200];
        assert!(matches!(
            thd(&x, 50.0, 1e-4, 100),
            Err(AnalysisError::NyquistViolation { .. })
        ));
        assert!(thd(&x, 50.0, 1e-4, 1).is_err());
    }
}
