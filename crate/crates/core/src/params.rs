//! The complete set of deployer-tunable model parameters.
//!
//! Every constant of the trust model lives here: the three sigmoid
//! parameter sets, the fusion weights and attention threshold, the incident
//! policy, and the signal-estimator parameters. The defaults reproduce the
//! published model; an override file replaces any subset of them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::{ConfidenceError, SigmoidParams};
use crate::fusion::{FusionConfig, FusionError};
use crate::memory::{IncidentPolicy, MemoryError};
use crate::signals::{IntentParams, MotionErrorParams, SignalError};

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("invalid confidence parameters: {0}")]
    Confidence(#[from] ConfidenceError),
    #[error("invalid fusion parameters: {0}")]
    Fusion(#[from] FusionError),
    #[error("invalid incident policy: {0}")]
    Incidents(#[from] MemoryError),
    #[error("invalid signal parameters: {0}")]
    Signals(#[from] SignalError),
    #[error("malformed parameter override: {0}")]
    Malformed(#[from] serde_json::Error),
}

/// All model constants, embedded in each task configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Attention confidence sigmoid over head yaw (degrees).
    pub attention: SigmoidParams,
    /// Intent confidence sigmoid over the intent probability.
    pub intent: SigmoidParams,
    /// Performance confidence sigmoid over the motion-error metric.
    pub performance: SigmoidParams,
    /// Conditional weighted-average configuration.
    pub fusion: FusionConfig,
    /// Signed trust adjustments per incident kind.
    pub incidents: IncidentPolicy,
    /// Bayesian intent estimator parameters.
    pub intent_estimator: IntentParams,
    /// Goal-directed motion-error estimator parameters.
    pub motion_error: MotionErrorParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            attention: SigmoidParams::attention_default(),
            intent: SigmoidParams::intent_default(),
            performance: SigmoidParams::performance_default(),
            fusion: FusionConfig::default(),
            incidents: IncidentPolicy::default(),
            intent_estimator: IntentParams::default(),
            motion_error: MotionErrorParams::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        self.attention.validate()?;
        self.intent.validate()?;
        self.performance.validate()?;
        self.fusion.validate()?;
        self.incidents.validate()?;
        self.intent_estimator.validate()?;
        self.motion_error.validate()?;
        Ok(())
    }

    /// Merge a JSON override onto these parameters.
    ///
    /// Objects merge key-by-key; any other value replaces the default
    /// wholesale. Unknown keys and post-merge invariant violations are
    /// rejected.
    pub fn with_overrides(&self, override_json: &str) -> Result<ModelParams, ParamsError> {
        let patch: serde_json::Value = serde_json::from_str(override_json)?;
        let mut base = serde_json::to_value(self).expect("params serialize");
        merge_value(&mut base, patch);
        let merged: ModelParams = serde_json::from_value(base)?;
        merged.validate()?;
        Ok(merged)
    }
}

fn merge_value(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(base_map), serde_json::Value::Object(patch_map)) => {
            for (key, value) in patch_map {
                match base_map.get_mut(&key) {
                    Some(slot) => merge_value(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}
