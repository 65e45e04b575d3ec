//! Conditional weighted-average trust fusion and the streaming engine.
//!
//! The three confidences are blended by a weighted average whose weights
//! depend on the operator's attention state: with head yaw above the
//! threshold (not attending the screen while possibly still driving) the
//! attention weight dominates, otherwise intent dominates:
//!
//! ```text
//! ha > 17:  w1=0.5, w2=0.15, w3=0.35
//! else:     w1=0.3, w2=0.15, w3=0.55
//! trust  =  w1*conf_h + w2*conf_e + w3*conf_i
//! ```
//!
//! The branch condition is strict; ha exactly at the threshold takes the
//! lower branch. [`TrustEngine`] runs the full per-record pipeline and
//! applies the teleoperation gate: when `teleop_active` is false the signal
//! states still advance, but no trust sample is emitted and the running
//! mean is untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::confidence::{confidences, ConfidenceError, ConfidenceVector};
use crate::memory::{IncidentPolicy, MemoryError, RunSummary, TrustState};
use crate::signals::{IntentState, MotionErrorState};
use crate::telemetry::{TaskConfig, TelemetryError, TelemetryRecord, TrialMeta};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("fusion weights must be non-negative, got ({w1}, {w2}, {w3})")]
    NegativeWeight { w1: f64, w2: f64, w3: f64 },
    #[error("fusion weights must sum to 1 within 1e-12, got {sum}")]
    WeightsNotNormalized { sum: f64 },
    #[error("attention threshold must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("out-of-order record: t={t} after t={prev}")]
    OutOfOrder { t: f64, prev: f64 },
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Params(Box<crate::params::ParamsError>),
}

impl From<crate::params::ParamsError> for FusionError {
    fn from(e: crate::params::ParamsError) -> Self {
        FusionError::Params(Box::new(e))
    }
}

/// Weights over (conf_h, conf_e, conf_i); must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionWeights {
    /// Attention weight.
    pub w1: f64,
    /// Performance weight.
    pub w2: f64,
    /// Intent weight.
    pub w3: f64,
}

impl FusionWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Self {
        Self { w1, w2, w3 }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.w1 >= 0.0 && self.w2 >= 0.0 && self.w3 >= 0.0) {
            return Err(FusionError::NegativeWeight {
                w1: self.w1,
                w2: self.w2,
                w3: self.w3,
            });
        }
        let sum = self.w1 + self.w2 + self.w3;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(FusionError::WeightsNotNormalized { sum });
        }
        Ok(())
    }

    pub fn apply(&self, cv: &ConfidenceVector) -> f64 {
        self.w1 * cv.conf_h + self.w2 * cv.conf_e + self.w3 * cv.conf_i
    }
}

/// Branch threshold and the two weight sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    /// Head-yaw threshold in degrees separating the two weight branches.
    pub attention_threshold_deg: f64,
    /// Weights when ha > threshold (operator not attending the screen).
    pub weights_above: FusionWeights,
    /// Weights when ha <= threshold.
    pub weights_at_or_below: FusionWeights,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            attention_threshold_deg: 17.0,
            weights_above: FusionWeights::new(0.5, 0.15, 0.35),
            weights_at_or_below: FusionWeights::new(0.3, 0.15, 0.55),
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !self.attention_threshold_deg.is_finite() {
            return Err(FusionError::InvalidThreshold(self.attention_threshold_deg));
        }
        self.weights_above.validate()?;
        self.weights_at_or_below.validate()?;
        Ok(())
    }

    /// The weight set selected by the operator's head yaw.
    pub fn weights_for(&self, ha_deg: f64) -> &FusionWeights {
        if ha_deg > self.attention_threshold_deg {
            &self.weights_above
        } else {
            &self.weights_at_or_below
        }
    }
}

/// Blend a confidence vector into instantaneous trust.
pub fn fuse(cv: &ConfidenceVector, ha_deg: f64, cfg: &FusionConfig) -> f64 {
    cfg.weights_for(ha_deg).apply(cv)
}

/// One emitted trust sample: the decomposed confidences, the raw signals,
/// and the fused values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustSample {
    pub t: f64,
    pub conf_h: f64,
    pub conf_e: f64,
    pub conf_i: f64,
    /// Navigational-intent probability.
    pub intent: f64,
    /// Goal-directed motion error.
    pub motion_error: f64,
    pub instant_trust: f64,
    pub short_term_trust: f64,
}

impl TrustSample {
    pub const CSV_HEADER: &'static str =
        "t,conf_h,conf_e,conf_i,i,p,instant_trust,short_term_trust";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t,
            self.conf_h,
            self.conf_e,
            self.conf_i,
            self.intent,
            self.motion_error,
            self.instant_trust,
            self.short_term_trust
        )
    }
}

/// Streaming per-trial trust estimator.
///
/// Feed records in timestamp order; each teleop-active record yields a
/// [`TrustSample`]. Incidents adjust the short-term coefficient before the
/// sample at the same record is formed, so a collision is visible in the
/// trust value of the record that carries it.
#[derive(Debug, Clone)]
pub struct TrustEngine {
    task: TaskConfig,
    intent: IntentState,
    motion: MotionErrorState,
    trust: TrustState,
    policy: IncidentPolicy,
    fusion: FusionConfig,
    sum_short_term: f64,
    emitted: u64,
    collisions: u32,
    goals_inspected: u32,
    net_incident_sum: f64,
    last_t: Option<f64>,
}

impl TrustEngine {
    pub fn new(task: TaskConfig) -> Self {
        let intent = IntentState::new(&task);
        let motion = MotionErrorState::new(&task);
        let policy = task.params.incidents.clone();
        let fusion = task.params.fusion;
        Self {
            task,
            intent,
            motion,
            trust: TrustState::new(),
            policy,
            fusion,
            sum_short_term: 0.0,
            emitted: 0,
            collisions: 0,
            goals_inspected: 0,
            net_incident_sum: 0.0,
            last_t: None,
        }
    }

    /// Process one record. Returns the emitted sample, or `None` when the
    /// teleop gate suppressed it.
    pub fn step(&mut self, rec: &TelemetryRecord) -> Result<Option<TrustSample>, FusionError> {
        if let Some(prev) = self.last_t {
            if rec.t <= prev {
                return Err(FusionError::OutOfOrder { t: rec.t, prev });
            }
        }
        self.last_t = Some(rec.t);

        if let Some(event) = &rec.event {
            let kind = event.kind();
            self.trust.apply_incident(kind, &self.policy)?;
            self.net_incident_sum += self.policy.adjustment(kind)?;
            match kind {
                crate::memory::IncidentKind::Collision => self.collisions += 1,
                crate::memory::IncidentKind::GoalInspected => self.goals_inspected += 1,
            }
        }

        let i = self.intent.update(rec, &self.task);
        let p = self.motion.update(rec, &self.task, self.intent.active_goal());

        let cv = confidences(rec.head_yaw_deg, i, p, &self.task.params)?;

        if !rec.teleop_active {
            return Ok(None);
        }
        let instant_trust = fuse(&cv, rec.head_yaw_deg, &self.fusion);
        self.trust.instant_trust = instant_trust;
        let short_term_trust = self.trust.short_term_trust();
        self.sum_short_term += short_term_trust;
        self.emitted += 1;
        Ok(Some(TrustSample {
            t: rec.t,
            conf_h: cv.conf_h,
            conf_e: cv.conf_e,
            conf_i: cv.conf_i,
            intent: i,
            motion_error: p,
            instant_trust,
            short_term_trust,
        }))
    }

    /// Mean short-term trust over emitted samples; `None` before the first
    /// gated sample.
    pub fn mean_short_term_trust(&self) -> Option<f64> {
        (self.emitted > 0).then(|| self.sum_short_term / self.emitted as f64)
    }

    pub fn emitted_samples(&self) -> u64 {
        self.emitted
    }

    pub fn stcf(&self) -> f64 {
        self.trust.stcf
    }

    pub fn collisions(&self) -> u32 {
        self.collisions
    }

    pub fn goals_inspected(&self) -> u32 {
        self.goals_inspected
    }

    pub fn net_incident_sum(&self) -> f64 {
        self.net_incident_sum
    }

    /// Timestamp of the last processed record.
    pub fn last_t(&self) -> Option<f64> {
        self.last_t
    }

    /// Summarize the finished run for the operator profile.
    pub fn run_summary(&self, trial_id: impl Into<String>) -> RunSummary {
        RunSummary {
            trial_id: trial_id.into(),
            mean_short_term_trust: self.mean_short_term_trust(),
            collisions: self.collisions,
            goals_inspected: self.goals_inspected,
            net_incident_sum: self.net_incident_sum,
        }
    }
}

/// Everything the pipeline knows about one estimated trial.
#[derive(Debug, Clone)]
pub struct TrialEstimate {
    pub meta: TrialMeta,
    pub samples: Vec<TrustSample>,
    pub mean_short_term_trust: Option<f64>,
    pub stcf: f64,
    pub collisions: u32,
    pub goals_inspected: u32,
    pub goals_total: u32,
    pub total_time_s: f64,
    pub net_incident_sum: f64,
}

/// Run the trust pipeline over an in-memory record sequence.
pub fn estimate_records<I>(
    meta: TrialMeta,
    task: TaskConfig,
    records: I,
) -> Result<TrialEstimate, FusionError>
where
    I: IntoIterator<Item = Result<TelemetryRecord, TelemetryError>>,
{
    let goals_total = task.goals.len() as u32;
    let mut engine = TrustEngine::new(task);
    let mut samples = Vec::new();
    for record in records {
        if let Some(sample) = engine.step(&record?)? {
            samples.push(sample);
        }
    }
    Ok(TrialEstimate {
        meta,
        mean_short_term_trust: engine.mean_short_term_trust(),
        stcf: engine.stcf(),
        collisions: engine.collisions(),
        goals_inspected: engine.goals_inspected(),
        goals_total,
        total_time_s: engine.last_t().unwrap_or(0.0),
        net_incident_sum: engine.net_incident_sum(),
        samples,
    })
}

/// Estimate a trial straight from its file.
pub fn estimate_trial_file(path: &std::path::Path) -> Result<TrialEstimate, FusionError> {
    estimate_trial_file_with(path, None)
}

/// Estimate a trial file, optionally merging a JSON parameter override
/// onto the parameters stored in its header.
pub fn estimate_trial_file_with(
    path: &std::path::Path,
    params_override: Option<&str>,
) -> Result<TrialEstimate, FusionError> {
    let (meta, mut task, records) = crate::telemetry::read_trial(path)?;
    if let Some(json) = params_override {
        task.params = task.params.with_overrides(json)?;
    }
    estimate_records(meta, task, records)
}
