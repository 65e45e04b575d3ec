//! Sigmoid confidence maps over the three operator signals.
//!
//! All three confidences are instances of one parameterized logistic
//! function with tabled default constants:
//!
//! * attention  `conf_h = 1/(1+exp(2.5*(ha - 17)))`   (decreasing in head yaw)
//! * intent     `conf_i = 1/(1+exp(-13*(i - 0.5)))`   (increasing in intent)
//! * performance `conf_e = 1/(1+exp(11*(p - 0.5)))`   (decreasing in motion error)
//!
//! Deployers can substitute their own slopes/midpoints through
//! [`crate::params::ModelParams`]; the defaults reproduce the model above
//! bit-for-bit. Inputs outside the nominal domains are evaluated rather than
//! clamped: the logistic saturates without discontinuities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;

#[derive(Debug, Error, PartialEq)]
pub enum ConfidenceError {
    #[error("logistic input is not finite: {0}")]
    NonFiniteInput(f64),
    #[error("sigmoid slope must be positive and finite, got {0}")]
    InvalidSlope(f64),
    #[error("sigmoid midpoint must be finite, got {0}")]
    InvalidMidpoint(f64),
}

/// Direction of the logistic: whether confidence grows or shrinks with the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Increasing,
    Decreasing,
}

/// Slope, midpoint, and direction of one confidence sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmoidParams {
    /// Steepness per unit input; must be positive.
    pub slope: f64,
    /// Input value mapped to confidence 0.5.
    pub midpoint: f64,
    pub orientation: Orientation,
}

impl SigmoidParams {
    /// Attention confidence over head yaw in degrees: midpoint 17, slope 2.5, decreasing.
    pub fn attention_default() -> Self {
        Self {
            slope: 2.5,
            midpoint: 17.0,
            orientation: Orientation::Decreasing,
        }
    }

    /// Intent confidence over the intent probability: midpoint 0.5, slope 13, increasing.
    pub fn intent_default() -> Self {
        Self {
            slope: 13.0,
            midpoint: 0.5,
            orientation: Orientation::Increasing,
        }
    }

    /// Performance confidence over the motion-error metric: midpoint 0.5, slope 11, decreasing.
    pub fn performance_default() -> Self {
        Self {
            slope: 11.0,
            midpoint: 0.5,
            orientation: Orientation::Decreasing,
        }
    }

    pub fn validate(&self) -> Result<(), ConfidenceError> {
        if !(self.slope.is_finite() && self.slope > 0.0) {
            return Err(ConfidenceError::InvalidSlope(self.slope));
        }
        if !self.midpoint.is_finite() {
            return Err(ConfidenceError::InvalidMidpoint(self.midpoint));
        }
        Ok(())
    }
}

/// The three instantaneous confidences, each in (0, 1) over nominal inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceVector {
    /// Attention confidence (from head yaw).
    pub conf_h: f64,
    /// Performance confidence (from the goal-directed motion error).
    pub conf_e: f64,
    /// Intent confidence (from the navigational-intent probability).
    pub conf_i: f64,
}

/// Evaluate one logistic confidence map at `x`.
pub fn logistic(x: f64, params: &SigmoidParams) -> Result<f64, ConfidenceError> {
    if !x.is_finite() {
        return Err(ConfidenceError::NonFiniteInput(x));
    }
    params.validate()?;
    let z = params.slope * (x - params.midpoint);
    let arg = match params.orientation {
        Orientation::Decreasing => z,
        Orientation::Increasing => -z,
    };
    Ok(1.0 / (1.0 + arg.exp()))
}

/// Map the three raw signals to their confidence vector.
///
/// `ha_deg` is the operator head yaw magnitude in degrees, `intent` the
/// navigational-intent probability, and `motion_error` the goal-directed
/// motion error in [0, 1].
pub fn confidences(
    ha_deg: f64,
    intent: f64,
    motion_error: f64,
    params: &ModelParams,
) -> Result<ConfidenceVector, ConfidenceError> {
    Ok(ConfidenceVector {
        conf_h: logistic(ha_deg, &params.attention)?,
        conf_e: logistic(motion_error, &params.performance)?,
        conf_i: logistic(intent, &params.intent)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn midpoints_give_exactly_half() {
        for p in [
            SigmoidParams::attention_default(),
            SigmoidParams::intent_default(),
            SigmoidParams::performance_default(),
        ] {
            let y = logistic(p.midpoint, &p).unwrap();
            assert!((y - 0.5).abs() < 1e-12, "logistic(midpoint) = {y}");
        }
    }

    #[test]
    fn attention_one_degree_past_threshold() {
        // 1/(1+e^2.5), evaluated independently to 16 digits.
        let y = logistic(18.0, &SigmoidParams::attention_default()).unwrap();
        assert!((y - 0.075858180021243547).abs() < 1e-15);
    }

    #[test]
    fn intent_at_high_probability() {
        // 1/(1+e^-3.9)
        let y = logistic(0.8, &SigmoidParams::intent_default()).unwrap();
        assert!((y - 0.980159694265922).abs() < 1e-12);
    }

    #[test]
    fn asymptotes_saturate_without_leaving_unit_interval() {
        let params = ModelParams::default();
        let high = confidences(0.0, 1.0, 0.0, &params).unwrap();
        assert!(high.conf_h > 0.99 && high.conf_i > 0.99 && high.conf_e > 0.99);
        let low = confidences(60.0, 0.0, 1.0, &params).unwrap();
        assert!(low.conf_h < 0.01 && low.conf_i < 0.01 && low.conf_e < 0.01);
        // Out-of-domain inputs are evaluated, not clamped.
        let wild = confidences(300.0, -4.0, 9.0, &params).unwrap();
        for c in [wild.conf_h, wild.conf_e, wild.conf_i] {
            assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let p = SigmoidParams::attention_default();
        assert!(matches!(
            logistic(f64::NAN, &p),
            Err(ConfidenceError::NonFiniteInput(_))
        ));
        assert!(logistic(f64::INFINITY, &p).is_err());
    }

    #[test]
    fn zero_slope_is_rejected() {
        let p = SigmoidParams {
            slope: 0.0,
            midpoint: 1.0,
            orientation: Orientation::Increasing,
        };
        assert!(matches!(
            logistic(1.0, &p),
            Err(ConfidenceError::InvalidSlope(_))
        ));
    }

    proptest! {
        /// Decreasing in head yaw: never increasing anywhere, and strictly
        /// decreasing wherever f64 resolves the sigmoid away from its
        /// asymptotes (below ~2.3 deg the value saturates to exactly 1.0).
        #[test]
        fn attention_is_decreasing(a in 0.0..180.0f64, b in 0.0..180.0f64) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p = SigmoidParams::attention_default();
            let (y_lo, y_hi) = (logistic(lo, &p).unwrap(), logistic(hi, &p).unwrap());
            prop_assert!(y_lo >= y_hi);
            if (1e-9..=1.0 - 1e-9).contains(&y_lo) && (1e-9..=1.0 - 1e-9).contains(&y_hi) {
                prop_assert!(y_lo > y_hi);
            }
        }

        #[test]
        fn intent_is_strictly_increasing(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p = SigmoidParams::intent_default();
            prop_assert!(logistic(lo, &p).unwrap() < logistic(hi, &p).unwrap());
        }

        #[test]
        fn performance_is_strictly_decreasing(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p = SigmoidParams::performance_default();
            prop_assert!(logistic(lo, &p).unwrap() > logistic(hi, &p).unwrap());
        }

        #[test]
        fn symmetric_about_midpoint(delta in 0.0..20.0f64) {
            for p in [
                SigmoidParams::attention_default(),
                SigmoidParams::intent_default(),
                SigmoidParams::performance_default(),
            ] {
                let up = logistic(p.midpoint + delta, &p).unwrap();
                let down = logistic(p.midpoint - delta, &p).unwrap();
                prop_assert!((up + down - 1.0).abs() < 1e-12);
            }
        }
    }
}
