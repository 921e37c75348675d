use super::AnalysisError;

/// Time between the first samples at or after `after_t` that reach
/// `low_frac·target` and `high_frac·target` (10%/90% by convention).
///
/// Works for negative targets too, where "reach" means falling to or below
/// the threshold.
pub fn rise_time(
    times: &[f64],
    values: &[f64],
    low_frac: f64,
    high_frac: f64,
    target: f64,
    after_t: f64,
) -> Result<f64, AnalysisError> {
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
    if !(0.0 <= low_frac && low_frac < high_frac) || target == 0.0 || !target.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!(
            "need 0 <= low_frac < high_frac and a finite non-zero target (got {low_frac}, {high_frac}, {target})"
        )));
    }
    let sign = target.signum();
    let first_reach = |frac: f64| {
        let threshold = frac * target;
        times
            .iter()
            .zip(values)
            .find(|(&t, &v)| t >= after_t && sign * v >= sign * threshold)
            .map(|(&t, _)| t)
            .ok_or(AnalysisError::NeverReached { threshold })
    };
    let t_high = first_reach(high_frac)?;
    let t_low = first_reach(low_frac)?;
    Ok(t_high - t_low)
}
