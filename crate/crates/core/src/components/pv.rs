use serde::{Deserialize, Serialize};

use super::{invalid, ComponentError};

const STC_IRRADIANCE: f64 = 1000.0;
const STC_TEMPERATURE: f64 = 25.0;
const KELVIN: f64 = 273.15;

/// PV array described by its STC rating and operating conditions.
///
/// The I–V curve is a single-exponential diode model
/// `i(v) = i_ph − i_0·(exp(v/a) − 1)` whose shape factor `a` is chosen so
/// that the power maximum sits exactly at `v_mpp` with power `p_stc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvArrayParams {
    /// Maximum power at standard test conditions (W).
    pub p_stc: f64,
    /// Voltage of the maximum power point at STC (V).
    pub v_mpp: f64,
    /// Open-circuit voltage at STC (V).
    pub v_oc: f64,
    /// Plane-of-array irradiance (W/m²).
    pub irradiance: f64,
    /// Cell temperature (°C).
    pub temperature: f64,
    /// Relative short-circuit current coefficient (1/K).
    pub alpha_isc: f64,
    /// Relative open-circuit voltage coefficient (1/K).
    pub beta_voc: f64,
}

impl Default for PvArrayParams {
    fn default() -> Self {
        Self {
            p_stc: 10_000.0,
            v_mpp: 700.0,
            v_oc: 850.0,
            irradiance: STC_IRRADIANCE,
            temperature: STC_TEMPERATURE,
            alpha_isc: 0.0005,
            beta_voc: -0.003,
        }
    }
}

impl PvArrayParams {
    pub fn validate(&self) -> Result<(), ComponentError> {
        if !(self.p_stc.is_finite() && self.p_stc > 0.0) {
            return Err(invalid("p_stc", "must be > 0"));
        }
        if !(self.v_oc.is_finite() && self.v_oc > 0.0) {
            return Err(invalid("v_oc", "must be > 0"));
        }
        if !(self.v_mpp > 0.5 * self.v_oc && self.v_mpp < self.v_oc) {
            return Err(invalid("v_mpp", "must lie in (v_oc/2, v_oc)"));
        }
        if !(self.irradiance.is_finite() && self.irradiance >= 0.0) {
            return Err(invalid("irradiance", "must be >= 0"));
        }
        if !self.temperature.is_finite() || self.temperature <= -KELVIN {
            return Err(invalid("temperature", "must be above absolute zero"));
        }
        Ok(())
    }

    /// Fit the curve at STC and evaluate it at the configured conditions.
    pub fn curve(&self) -> Result<PvCurve, ComponentError> {
        self.validate()?;
        let a_stc = fit_shape_factor(self.v_mpp, self.v_oc);
        let i_sc_stc = self.p_stc / (self.v_mpp * normalized_current(self.v_mpp, self.v_oc, a_stc));
        let dtemp = self.temperature - STC_TEMPERATURE;
        let i_ph = i_sc_stc * (self.irradiance / STC_IRRADIANCE) * (1.0 + self.alpha_isc * dtemp);
        let v_oc = self.v_oc * (1.0 + self.beta_voc * dtemp);
        let a = a_stc * (self.temperature + KELVIN) / (STC_TEMPERATURE + KELVIN);
        if !(v_oc > 0.0) {
            return Err(invalid(
                "beta_voc",
                "open-circuit voltage collapses at this temperature",
            ));
        }
        Ok(PvCurve {
            i_ph: i_ph.max(0.0),
            v_oc,
            a,
        })
    }
}

/// Evaluated I–V curve at fixed operating conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvCurve {
    /// Photocurrent, equal to the short-circuit current (A).
    pub i_ph: f64,
    pub v_oc: f64,
    /// Diode shape factor n·Ns·Vt (V).
    pub a: f64,
}

impl PvCurve {
    pub fn i_sc(&self) -> f64 {
        self.i_ph
    }

    pub fn current(&self, v: f64) -> f64 {
        if v >= self.v_oc {
            return 0.0;
        }
        self.i_ph * normalized_current(v.max(0.0), self.v_oc, self.a)
    }

    pub fn power(&self, v: f64) -> f64 {
        v * self.current(v)
    }
}

pub fn pv_current(params: &PvArrayParams, v_dc: f64) -> Result<f64, ComponentError> {
    Ok(params.curve()?.current(v_dc))
}

/// `i(v)/i_ph = 1 − (e^{v/a} − 1)/(e^{voc/a} − 1)`, written to avoid overflow.
fn normalized_current(v: f64, v_oc: f64, a: f64) -> f64 {
    let ratio = ((v - v_oc) / a).exp() * (-(-v / a).exp_m1()) / (-(-v_oc / a).exp_m1());
    1.0 - ratio
}

fn normalized_slope(v: f64, v_oc: f64, a: f64) -> f64 {
    -((v - v_oc) / a).exp() / (a * -(-v_oc / a).exp_m1())
}

/// Shape factor for which d(v·i)/dv vanishes at `v_mpp`. The derivative
/// at `v_mpp` is positive for small `a` and negative for large `a`, so a
/// log-space bisection brackets the unique root.
fn fit_shape_factor(v_mpp: f64, v_oc: f64) -> f64 {
    let dp = |a: f64| normalized_current(v_mpp, v_oc, a) + v_mpp * normalized_slope(v_mpp, v_oc, a);
    let (mut lo, mut hi) = ((v_oc * 1e-4).ln(), (v_oc * 1e3).ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dp(mid.exp()) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sized_5800() -> PvArrayParams {
        PvArrayParams {
            p_stc: 5800.0,
            v_mpp: 600.0,
            v_oc: 740.0,
            ..Default::default()
        }
    }

    #[test]
    fn open_and_short_circuit() {
        let p = PvArrayParams::default();
        let curve = p.curve().unwrap();
        assert_eq!(pv_current(&p, p.v_oc).unwrap(), 0.0);
        assert_eq!(curve.current(0.0), curve.i_sc());
        assert!(curve.i_sc() > 0.0);
        assert_eq!(curve.current(p.v_oc + 10.0), 0.0);
    }

    #[test]
    fn mpp_current_matches_rating() {
        let p = sized_5800();
        let i = pv_current(&p, p.v_mpp).unwrap();
        let expect = 5800.0 / p.v_mpp;
        assert!((i - expect).abs() / expect < 0.01, "{i} vs {expect}");
    }

    /// Independent check: brute-force scan of the P–V curve.
    #[test]
    fn scanned_maximum_is_at_v_mpp() {
        let p = sized_5800();
        let curve = p.curve().unwrap();
        let n = 200_000;
        let (mut best_v, mut best_p) = (0.0, f64::MIN);
        for k in 0..=n {
            let v = p.v_oc * k as f64 / n as f64;
            let pw = curve.power(v);
            if pw > best_p {
                best_p = pw;
                best_v = v;
            }
        }
        assert!((best_v - p.v_mpp).abs() < 0.01, "scan max at {best_v}");
        assert!((best_p - 5800.0).abs() / 5800.0 < 1e-6, "scan max power {best_p}");
    }

    #[test]
    fn curve_monotone_with_single_interior_power_peak() {
        let curve = PvArrayParams::default().curve().unwrap();
        let n = 5000;
        let vs: Vec<f64> = (0..=n).map(|k| curve.v_oc * k as f64 / n as f64).collect();
        let mut sign_changes = 0;
        let mut rising = true;
        for w in vs.windows(2) {
            assert!(curve.current(w[1]) <= curve.current(w[0]));
            let up = curve.power(w[1]) > curve.power(w[0]);
            if up != rising {
                sign_changes += 1;
                rising = up;
            }
        }
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn irradiance_scales_current() {
        let full = PvArrayParams::default();
        let half = PvArrayParams {
            irradiance: 500.0,
            ..Default::default()
        };
        let v = 650.0;
        let a = pv_current(&full, v).unwrap();
        let b = pv_current(&half, v).unwrap();
        assert!((b - 0.5 * a).abs() < 1e-9 * a);
    }

    #[test]
    fn rejects_bad_params() {
        let p = PvArrayParams {
            v_mpp: 300.0,
            ..Default::default()
        };
        assert!(p.curve().is_err());
        let p = PvArrayParams {
            p_stc: 0.0,
            ..Default::default()
        };
        assert!(p.curve().is_err());
    }
}
