//! Adaptive observability filter.
//!
//! A first-order blend x̂_k = α_k·x̌_k + (1−α_k)·x̂_{k−1} whose weight α_k
//! comes from an inverted, normalized log-variance map: high observability
//! (small variance bound) pulls the filtered estimate toward the raw one,
//! low observability freezes it. Angle variables are filtered on their
//! (sin, cos) components and renormalized, which reduces to the scalar
//! update away from the ±π seam.

use crate::error::{Error, Result};

/// Log-variance thresholds mapping an observability level to α ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaMap {
    /// Variance at or below which α = 1 (fully trust the raw estimate).
    pub v_low: f64,
    /// Variance at or above which α = 0 (hold the previous estimate).
    pub v_high: f64,
}

impl AlphaMap {
    pub fn new(v_low: f64, v_high: f64) -> Result<Self> {
        if !(v_low > 0.0) || !(v_high > v_low) {
            return Err(Error::InvalidArgument(format!(
                "alpha map needs 0 < v_low < v_high, got ({v_low}, {v_high})"
            )));
        }
        Ok(Self { v_low, v_high })
    }
}

/// Map an estimated minimum error variance to the filter weight α.
///
/// α = clip((log v_high − log v) / (log v_high − log v_low), 0, 1); monotone
/// non-increasing in the variance.
pub fn alpha_from_observability(variance: f64, map: &AlphaMap) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "variance must be positive, got {variance}"
        )));
    }
    let alpha =
        (map.v_high.ln() - variance.ln()) / (map.v_high.ln() - map.v_low.ln());
    Ok(alpha.clamp(0.0, 1.0))
}

/// Running state of the observability filter for one variable.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservabilityFilterState {
    Scalar { estimate: f64 },
    /// Angle tracked as a unit vector, renormalized after every update.
    Angle { sin: f64, cos: f64 },
}

impl ObservabilityFilterState {
    pub fn scalar(initial: f64) -> Self {
        Self::Scalar { estimate: initial }
    }

    pub fn angle(initial: f64) -> Self {
        Self::Angle {
            sin: initial.sin(),
            cos: initial.cos(),
        }
    }

    /// Current filtered estimate (angles in (−π, π]).
    pub fn estimate(&self) -> f64 {
        match self {
            Self::Scalar { estimate } => *estimate,
            Self::Angle { sin, cos } => sin.atan2(*cos),
        }
    }
}

/// One filter update; returns the new filtered estimate.
pub fn observability_filter_step(
    state: &mut ObservabilityFilterState,
    raw: f64,
    alpha: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    match state {
        ObservabilityFilterState::Scalar { estimate } => {
            *estimate = alpha * raw + (1.0 - alpha) * *estimate;
            Ok(*estimate)
        }
        ObservabilityFilterState::Angle { sin, cos } => {
            let s = alpha * raw.sin() + (1.0 - alpha) * *sin;
            let c = alpha * raw.cos() + (1.0 - alpha) * *cos;
            let norm = s.hypot(c);
            if norm > 1e-12 {
                *sin = s / norm;
                *cos = c / norm;
            }
            Ok(sin.atan2(*cos))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn alpha_one_copies_raw_estimate() {
        let mut state = ObservabilityFilterState::scalar(5.0);
        let out = observability_filter_step(&mut state, -2.0, 1.0).unwrap();
        assert_eq!(out, -2.0);
    }

    #[test]
    fn alpha_zero_holds_previous_estimate() {
        let mut state = ObservabilityFilterState::scalar(5.0);
        let out = observability_filter_step(&mut state, -2.0, 0.0).unwrap();
        assert_eq!(out, 5.0);
    }

    #[test]
    fn constant_half_alpha_follows_geometric_recursion() {
        // step from 0 to 1 with α = 0.5 reaches 1 − 2^{-k} after k updates
        let mut state = ObservabilityFilterState::scalar(0.0);
        for k in 1..=10 {
            let out = observability_filter_step(&mut state, 1.0, 0.5).unwrap();
            assert_relative_eq!(out, 1.0 - 2f64.powi(-k), epsilon = 1e-12);
        }
    }

    #[test]
    fn angle_update_handles_the_seam() {
        use std::f64::consts::PI;
        // previous estimate just below +π, raw just above −π: the blended
        // angle stays near the seam instead of jumping to zero
        let mut state = ObservabilityFilterState::angle(PI - 0.05);
        let out = observability_filter_step(&mut state, -PI + 0.05, 0.5).unwrap();
        assert!(out.abs() > PI - 0.1, "estimate {out} collapsed across the seam");
    }

    #[test]
    fn angle_update_reduces_to_scalar_away_from_seam() {
        let mut angle = ObservabilityFilterState::angle(0.4);
        let mut scalar = ObservabilityFilterState::scalar(0.4);
        for raw in [0.5, 0.6, 0.3, 0.45] {
            let a = observability_filter_step(&mut angle, raw, 0.3).unwrap();
            let s = observability_filter_step(&mut scalar, raw, 0.3).unwrap();
            assert_abs_diff_eq!(a, s, epsilon = 2e-3);
        }
    }

    #[test]
    fn filtered_estimate_stays_in_convex_hull() {
        let mut state = ObservabilityFilterState::scalar(0.3);
        let raws = [0.9, -0.4, 0.2, 0.7, -0.1];
        let lo = raws.iter().cloned().fold(0.3_f64, f64::min);
        let hi = raws.iter().cloned().fold(0.3_f64, f64::max);
        for (i, raw) in raws.iter().enumerate() {
            let alpha = 0.2 + 0.15 * i as f64;
            let out = observability_filter_step(&mut state, *raw, alpha).unwrap();
            assert!(out >= lo - 1e-12 && out <= hi + 1e-12);
        }
    }

    #[test]
    fn alpha_map_clamps_and_hits_log_midpoint() {
        let map = AlphaMap::new(1e-2, 1e4).unwrap();
        assert_eq!(alpha_from_observability(1e-3, &map).unwrap(), 1.0);
        assert_eq!(alpha_from_observability(1e-2, &map).unwrap(), 1.0);
        assert_eq!(alpha_from_observability(1e4, &map).unwrap(), 0.0);
        assert_eq!(alpha_from_observability(1e9, &map).unwrap(), 0.0);
        let mid = (1e-2_f64 * 1e4_f64).sqrt();
        assert_relative_eq!(
            alpha_from_observability(mid, &map).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(alpha_from_observability(0.0, &map).is_err());
        assert!(alpha_from_observability(-1.0, &map).is_err());
    }

    #[test]
    fn alpha_is_monotone_non_increasing_in_variance() {
        let map = AlphaMap::new(1e-1, 1e5).unwrap();
        let mut previous = 1.0;
        for exp in -3..8 {
            let v = 10f64.powi(exp);
            let a = alpha_from_observability(v, &map).unwrap();
            assert!(a <= previous + 1e-15);
            previous = a;
        }
    }
}
