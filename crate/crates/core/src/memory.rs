//! Episodic trust memory: incident-driven coefficient adjustment.
//!
//! Task-critical incidents adjust the trust estimate through two
//! coefficients:
//!
//! * `stcf` — short-term, additive within a run. Initialized at 0, clamped
//!   to [-1, 1]. Short-term trust is `clamp(instant_trust + stcf, 0, 1)`.
//! * `ltcf` — long-term (reputation), multiplicative across runs.
//!   Initialized at 1, clamped to [0, 2], updated once per finished run by
//!   the signed sum of that run's incident adjustments. The long-term value
//!   is persisted per operator but does not feed back into real-time
//!   estimation.
//!
//! Default adjustments: a goal inspection rewards +0.033, a collision
//! penalizes -0.2.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("no adjustment configured for incident kind `{0}`")]
    UnknownIncident(IncidentKind),
    #[error("incident adjustment for `{kind}` is not finite: {value}")]
    NonFiniteAdjustment { kind: IncidentKind, value: f64 },
    #[error("failed to read operator profile {path}: {source}")]
    ProfileRead { path: PathBuf, source: io::Error },
    #[error("failed to write operator profile {path}: {source}")]
    ProfileWrite { path: PathBuf, source: io::Error },
    #[error("malformed operator profile {path}: {source}")]
    ProfileParse {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Kinds of task-critical incidents an operator can cause.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum IncidentKind {
    Collision,
    GoalInspected,
}

impl std::fmt::Display for IncidentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IncidentKind::Collision => f.write_str("Collision"),
            IncidentKind::GoalInspected => f.write_str("GoalInspected"),
        }
    }
}

/// Signed trust adjustment per incident kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IncidentPolicy {
    pub adjustments: BTreeMap<IncidentKind, f64>,
}

impl Default for IncidentPolicy {
    fn default() -> Self {
        let mut adjustments = BTreeMap::new();
        adjustments.insert(IncidentKind::Collision, -0.2);
        adjustments.insert(IncidentKind::GoalInspected, 0.033);
        Self { adjustments }
    }
}

impl IncidentPolicy {
    /// Signed magnitude for `kind`; errors when the policy has no entry.
    pub fn adjustment(&self, kind: IncidentKind) -> Result<f64, MemoryError> {
        self.adjustments
            .get(&kind)
            .copied()
            .ok_or(MemoryError::UnknownIncident(kind))
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        for (&kind, &value) in &self.adjustments {
            if !value.is_finite() {
                return Err(MemoryError::NonFiniteAdjustment { kind, value });
            }
        }
        Ok(())
    }
}

pub const STCF_MIN: f64 = -1.0;
pub const STCF_MAX: f64 = 1.0;
pub const LTCF_MIN: f64 = 0.0;
pub const LTCF_MAX: f64 = 2.0;

/// Short-term trust: the additive incident adjustment, clamped to [0, 1].
pub fn short_term_trust(instant_trust: f64, stcf: f64) -> f64 {
    (instant_trust + stcf).clamp(0.0, 1.0)
}

/// Instantaneous trust plus the two memory coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustState {
    /// Most recent fused trust value in [0, 1].
    pub instant_trust: f64,
    /// Short-term trust coefficient in [-1, 1].
    pub stcf: f64,
    /// Long-term (reputation) trust coefficient in [0, 2].
    pub ltcf: f64,
}

impl Default for TrustState {
    fn default() -> Self {
        Self::new()
    }
}

impl TrustState {
    pub fn new() -> Self {
        Self {
            instant_trust: 0.0,
            stcf: 0.0,
            ltcf: 1.0,
        }
    }

    /// Apply one incident: `stcf <- clamp(stcf + adjustment, -1, 1)`.
    pub fn apply_incident(
        &mut self,
        kind: IncidentKind,
        policy: &IncidentPolicy,
    ) -> Result<(), MemoryError> {
        let adj = policy.adjustment(kind)?;
        self.stcf = (self.stcf + adj).clamp(STCF_MIN, STCF_MAX);
        Ok(())
    }

    /// Clamped short-term trust for the current instant.
    pub fn short_term_trust(&self) -> f64 {
        short_term_trust(self.instant_trust, self.stcf)
    }

    /// Unclamped `instant_trust + stcf`, kept for diagnostics.
    pub fn short_term_trust_raw(&self) -> f64 {
        self.instant_trust + self.stcf
    }
}

/// Aggregates of one finished run, as recorded in the operator profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trial_id: String,
    /// Mean short-term trust over teleop-gated samples; absent when the
    /// trial produced no gated samples.
    pub mean_short_term_trust: Option<f64>,
    pub collisions: u32,
    pub goals_inspected: u32,
    /// Signed sum of incident adjustments over the run (unclamped).
    pub net_incident_sum: f64,
}

/// Per-operator episodic memory: reputation coefficient plus run history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorProfile {
    pub operator_id: String,
    pub ltcf: f64,
    pub history: Vec<RunSummary>,
}

impl OperatorProfile {
    pub fn new(operator_id: impl Into<String>) -> Self {
        Self {
            operator_id: operator_id.into(),
            ltcf: 1.0,
            history: Vec::new(),
        }
    }

    /// Fold a finished run into the reputation:
    /// `ltcf <- clamp(ltcf * (1 + net_incident_sum), 0, 2)`.
    pub fn finalize_run(&mut self, run: RunSummary) {
        self.ltcf = (self.ltcf * (1.0 + run.net_incident_sum)).clamp(LTCF_MIN, LTCF_MAX);
        self.history.push(run);
    }

    /// Reputation-weighted trust for a run mean: `clamp(mean * ltcf, 0, 1)`.
    pub fn long_term_trust(&self, mean_short_term_trust: f64) -> f64 {
        (mean_short_term_trust * self.ltcf).clamp(0.0, 1.0)
    }
}

/// One JSON file per operator under a profiles directory.
#[derive(Debug, Clone)]
pub struct ProfileStore {
    dir: PathBuf,
}

impl ProfileStore {
    /// Open (creating if needed) a profile directory.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn path_for(&self, operator_id: &str) -> PathBuf {
        self.dir.join(format!("{}.json", sanitize_file_stem(operator_id)))
    }

    /// Load an operator's profile, or a fresh one if none is stored yet.
    pub fn load(&self, operator_id: &str) -> Result<OperatorProfile, MemoryError> {
        let path = self.path_for(operator_id);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|source| MemoryError::ProfileParse { path, source }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Ok(OperatorProfile::new(operator_id))
            }
            Err(source) => Err(MemoryError::ProfileRead { path, source }),
        }
    }

    pub fn save(&self, profile: &OperatorProfile) -> Result<(), MemoryError> {
        let path = self.path_for(&profile.operator_id);
        let text = serde_json::to_string_pretty(profile).expect("profile serializes");
        fs::write(&path, text.as_bytes())
            .map_err(|source| MemoryError::ProfileWrite { path, source })
    }
}

/// Keep operator ids usable as file stems.
pub fn sanitize_file_stem(raw: &str) -> String {
    let mut out: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() {
        out.push('_');
    }
    out
}
