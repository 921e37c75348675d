use super::{invalid, ComponentError, PvCurve};

/// Split DC link (DC+, DCn, DC−) with the neutral point at 0 V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcLinkState {
    pub v_dc_plus: f64,
    pub v_dc_minus: f64,
    /// Equivalent capacitance across DC+ and DC− (F).
    pub capacitance: f64,
}

impl DcLinkState {
    pub fn new(v_dc: f64, capacitance: f64) -> Result<Self, ComponentError> {
        if !(capacitance.is_finite() && capacitance > 0.0) {
            return Err(invalid("capacitance", "must be > 0"));
        }
        if !(v_dc.is_finite() && v_dc >= 0.0) {
            return Err(invalid("v_dc", "must be finite and >= 0"));
        }
        Ok(Self::split(v_dc, capacitance))
    }

    fn split(v_dc: f64, capacitance: f64) -> Self {
        Self {
            v_dc_plus: 0.5 * v_dc,
            v_dc_minus: -0.5 * v_dc,
            capacitance,
        }
    }

    pub fn v_dc(&self) -> f64 {
        self.v_dc_plus - self.v_dc_minus
    }

    pub fn energy(&self) -> f64 {
        0.5 * self.capacitance * self.v_dc().powi(2)
    }

    fn with_energy(&self, energy: f64) -> Result<Self, ComponentError> {
        let v = (2.0 * energy.max(0.0) / self.capacitance).sqrt();
        if !v.is_finite() {
            return Err(ComponentError::NumericalDivergence("dc link"));
        }
        Ok(Self::split(v, self.capacitance))
    }

    /// Backward-Euler step with the PV array feeding the link: solves
    /// `E(v_new) = E(v) + (v_new·i_pv(v_new) − p_out)·dt` for `v_new`.
    /// Returns the new state and the PV power actually absorbed.
    pub fn step_with_pv(&self, pv: &PvCurve, p_out: f64, dt: f64) -> Result<(Self, f64), ComponentError> {
        if !p_out.is_finite() {
            return Err(ComponentError::NumericalDivergence("dc link"));
        }
        let e0 = self.energy();
        let c = self.capacitance;
        let residual = |v: f64| 0.5 * c * v * v - e0 - (pv.power(v) - p_out) * dt;
        // residual(0) <= 0 unless the link would be drained; residual grows
        // without bound once v exceeds v_oc.
        let v_max_pv = pv.v_oc.max(0.0);
        let mut hi = (2.0 * (e0 + (pv.i_sc() * v_max_pv + p_out.abs()) * dt) / c).sqrt() + 1.0;
        if residual(0.0) >= 0.0 {
            return Ok((Self::split(0.0, c), 0.0));
        }
        while residual(hi) < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(ComponentError::NumericalDivergence("dc link"));
            }
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v = 0.5 * (lo + hi);
        Ok((Self::split(v, c), pv.power(v)))
    }
}

/// Energy update `½C·v² += (p_in − p_out)·dt` for given power flows.
pub fn dclink_step(state: &DcLinkState, p_in: f64, p_out: f64, dt: f64) -> Result<DcLinkState, ComponentError> {
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    if p_in == p_out {
        return Ok(*state);
    }
    state.with_energy(state.energy() + (p_in - p_out) * dt)
}
