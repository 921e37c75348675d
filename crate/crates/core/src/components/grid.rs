use std::f64::consts::{PI, SQRT_2};

use super::{invalid, ComponentError};

/// Phase displacement between consecutive phases (L2 lags L1 by this, L3 by twice this).
pub const PHASE_SHIFT: f64 = 2.0 * PI / 3.0;

/// Ideal three-phase voltage source with per-phase dip residuals.
///
/// Phase convention: `U_L1 = √2·U·sin(2π·f0·t + phase_offset)`, L2 and L3
/// lagging by 120° and 240°.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSource {
    pub u_rms_nominal: f64,
    pub f0: f64,
    pub phase_offset: f64,
    residual: [f64; 3],
}

impl GridSource {
    pub fn new(u_rms_nominal: f64, f0: f64) -> Result<Self, ComponentError> {
        if !(u_rms_nominal.is_finite() && u_rms_nominal >= 0.0) {
            return Err(invalid("u_rms_nominal", "must be finite and >= 0"));
        }
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(invalid("f0", "must be > 0"));
        }
        Ok(Self {
            u_rms_nominal,
            f0,
            phase_offset: 0.0,
            residual: [1.0; 3],
        })
    }

    pub fn with_phase_offset(mut self, phase_offset: f64) -> Self {
        self.phase_offset = phase_offset;
        self
    }

    pub fn residual(&self) -> [f64; 3] {
        self.residual
    }

    pub fn set_residual(&mut self, residual: [f64; 3]) -> Result<(), ComponentError> {
        if residual.iter().any(|r| !(0.0..=1.5).contains(r)) {
            return Err(invalid("residual", "each phase must lie in [0, 1.5] p.u."));
        }
        self.residual = residual;
        Ok(())
    }

    pub fn clear_fault(&mut self) {
        self.residual = [1.0; 3];
    }

    pub fn peak(&self) -> f64 {
        SQRT_2 * self.u_rms_nominal
    }

    /// Electrical angle of phase L1 at time `t`.
    pub fn angle(&self, t: f64) -> f64 {
        2.0 * PI * self.f0 * t + self.phase_offset
    }

    pub fn voltages(&self, t: f64) -> [f64; 3] {
        grid_voltage(self, t)
    }

    /// Instantaneous voltages shifted a quarter period ahead (cosine
    /// counterpart), used for reactive branch currents.
    pub fn quadrature(&self, t: f64) -> [f64; 3] {
        let theta = self.angle(t);
        let peak = self.peak();
        std::array::from_fn(|k| self.residual[k] * peak * (theta - k as f64 * PHASE_SHIFT).cos())
    }
}

pub fn grid_voltage(source: &GridSource, t: f64) -> [f64; 3] {
    let theta = source.angle(t);
    let peak = source.peak();
    std::array::from_fn(|k| source.residual[k] * peak * (theta - k as f64 * PHASE_SHIFT).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_of_l1() {
        let src = GridSource::new(230.0, 50.0).unwrap();
        let v = src.voltages(0.005);
        assert!((v[0] - 325.269_119_345_812_2).abs() < 1e-9, "{}", v[0]);
        // L2 and L3 at -120/-240 degrees from the L1 peak
        assert!((v[1] + 162.634_559_672_906_1).abs() < 1e-9);
        assert!((v[2] + 162.634_559_672_906_1).abs() < 1e-9);
    }

    #[test]
    fn sine_reference_at_zero() {
        let src = GridSource::new(230.0, 50.0).unwrap();
        assert_eq!(src.voltages(0.0)[0], 0.0);
        let shifted = src.with_phase_offset(PI / 2.0);
        assert!((shifted.voltages(0.0)[0] - 230.0 * SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn full_dip_is_zero() {
        let mut src = GridSource::new(230.0, 50.0).unwrap();
        src.set_residual([0.0; 3]).unwrap();
        for k in 0..100 {
            assert_eq!(src.voltages(k as f64 * 1e-4), [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn residual_scales_peak() {
        let mut src = GridSource::new(230.0, 50.0).unwrap();
        src.set_residual([0.05; 3]).unwrap();
        assert!((src.voltages(0.005)[0] - 16.263_455_967_290_6).abs() < 1e-9);
        src.clear_fault();
        assert_eq!(src.residual(), [1.0; 3]);
    }

    #[test]
    fn residual_bounds() {
        let mut src = GridSource::new(230.0, 50.0).unwrap();
        assert!(src.set_residual([1.6, 1.0, 1.0]).is_err());
        assert!(src.set_residual([-0.1, 1.0, 1.0]).is_err());
        assert!(src.set_residual([1.5, 0.0, 1.0]).is_ok());
        assert!(GridSource::new(230.0, 0.0).is_err());
    }
}
