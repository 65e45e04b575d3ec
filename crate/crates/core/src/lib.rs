//! Real-time artificial trust estimation for teleoperated mobile robots.
//!
//! The crate consumes teleoperation telemetry (replayed trial logs or
//! synthetic trials), derives confidence signals about the operator's
//! attention, navigational intent, and goal-directed performance, fuses them
//! into a bounded trust estimate with short/long-term episodic memory, and
//! ranks operators against a capability ordering.
//!
//! Pipeline overview:
//!
//! ```text
//! trial log ──▶ telemetry ──▶ signals (intent i, motion error p)
//!                      │              │
//!                      │              ▼
//!                      │        confidence (sigmoid maps)
//!                      │              │
//!                      ▼              ▼
//!                  teleop gate ──▶ fusion (conditional weighted average)
//!                                     │
//!                                     ▼
//!                               memory (stcf/ltcf) ──▶ evaluation (ranking)
//! ```
//!
//! All model constants live in [`params::ModelParams`] and can be overridden
//! by deployers; the defaults reproduce the published model.

pub mod confidence;
pub mod evaluation;
pub mod fusion;
pub mod geom;
pub mod memory;
pub mod params;
pub mod signals;
pub mod simulator;
pub mod telemetry;

pub use confidence::{confidences, logistic, ConfidenceVector, SigmoidParams};
pub use fusion::{fuse, FusionConfig, FusionWeights, TrustEngine, TrustSample};
pub use memory::{IncidentKind, IncidentPolicy, OperatorProfile, TrustState};
pub use params::ModelParams;
pub use telemetry::{TaskConfig, TelemetryRecord, TrialEvent, TrialMeta};
