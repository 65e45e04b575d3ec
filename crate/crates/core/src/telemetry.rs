//! Trial log data model, on-disk format, and timestamp-ordered replay.
//!
//! A trial file is a single self-describing UTF-8 text file:
//!
//! * line 1 — a JSON header object with keys `meta` and `task`;
//! * every following non-empty line — one telemetry record as
//!   comma-separated fields in fixed order
//!   `t,x,y,heading,v_cmd,w_cmd,head_yaw_deg,teleop_active,event`
//!   where `event` is `-` (none), `C` (collision), or `G:<goal_id>`
//!   (goal inspected).
//!
//! Floats are written in shortest round-trip decimal form, so
//! `read_trial(write_trial(..))` is field-exact. Records must carry
//! strictly increasing timestamps.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::IncidentKind;
use crate::params::ModelParams;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    MalformedLine {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: unknown event tag `{tag}`")]
    UnknownEventTag { line: usize, tag: String },
    #[error("line {line}: event references unknown goal `{goal_id}`")]
    UnknownGoal { line: usize, goal_id: String },
    #[error("line {line}: non-monotonic timestamp {t} (previous record at {prev})")]
    NonMonotonicTimestamp { line: usize, t: f64, prev: f64 },
    #[error("record {index}: {message}")]
    InvalidRecord { index: usize, message: String },
    #[error("invalid task configuration: {0}")]
    InvalidTask(String),
    #[error("invalid trial metadata: {0}")]
    InvalidMeta(String),
}

/// Incident tag carried by a telemetry record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialEvent {
    Collision,
    GoalInspected(String),
}

impl TrialEvent {
    pub fn kind(&self) -> IncidentKind {
        match self {
            TrialEvent::Collision => IncidentKind::Collision,
            TrialEvent::GoalInspected(_) => IncidentKind::GoalInspected,
        }
    }
}

/// One timestamped telemetry sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    /// Seconds since trial start; strictly increasing within a trial.
    pub t: f64,
    /// Robot planar position, meters.
    pub x: f64,
    pub y: f64,
    /// Robot yaw, radians in (-pi, pi].
    pub heading: f64,
    /// Commanded linear speed, m/s (signed; negative drives in reverse).
    pub v_cmd: f64,
    /// Commanded angular speed, rad/s.
    pub w_cmd: f64,
    /// Operator head yaw magnitude relative to screen center, degrees in [0, 180].
    pub head_yaw_deg: f64,
    /// Whether the operator is actively teleoperating.
    pub teleop_active: bool,
    /// At most one incident per record.
    pub event: Option<TrialEvent>,
}

impl TelemetryRecord {
    /// Check the per-record field domains (timestamp ordering is a
    /// stream-level property checked separately).
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("t", self.t),
            ("x", self.x),
            ("y", self.y),
            ("heading", self.heading),
            ("v_cmd", self.v_cmd),
            ("w_cmd", self.w_cmd),
            ("head_yaw_deg", self.head_yaw_deg),
        ] {
            if !v.is_finite() {
                return Err(format!("field `{name}` is not finite: {v}"));
            }
        }
        if self.t < 0.0 {
            return Err(format!("field `t` must be non-negative, got {}", self.t));
        }
        if !(self.heading > -std::f64::consts::PI && self.heading <= std::f64::consts::PI) {
            return Err(format!(
                "field `heading` must lie in (-pi, pi], got {}",
                self.heading
            ));
        }
        if !(0.0..=180.0).contains(&self.head_yaw_deg) {
            return Err(format!(
                "field `head_yaw_deg` must lie in [0, 180], got {}",
                self.head_yaw_deg
            ));
        }
        if let Some(TrialEvent::GoalInspected(goal_id)) = &self.event {
            if goal_id.is_empty() {
                return Err("GoalInspected event has an empty goal id".into());
            }
        }
        Ok(())
    }

    fn to_line(&self) -> String {
        let event = match &self.event {
            None => "-".to_string(),
            Some(TrialEvent::Collision) => "C".to_string(),
            Some(TrialEvent::GoalInspected(goal_id)) => format!("G:{goal_id}"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.x,
            self.y,
            self.heading,
            self.v_cmd,
            self.w_cmd,
            self.head_yaw_deg,
            self.teleop_active,
            event
        )
    }

    fn from_line(line: &str, line_no: usize) -> Result<Self, TelemetryError> {
        const FIELDS: [&str; 9] = [
            "t",
            "x",
            "y",
            "heading",
            "v_cmd",
            "w_cmd",
            "head_yaw_deg",
            "teleop_active",
            "event",
        ];
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != FIELDS.len() {
            return Err(TelemetryError::MalformedLine {
                line: line_no,
                field: "record",
                message: format!("expected {} comma-separated fields, got {}", FIELDS.len(), parts.len()),
            });
        }
        let float = |idx: usize| -> Result<f64, TelemetryError> {
            parts[idx]
                .parse::<f64>()
                .map_err(|e| TelemetryError::MalformedLine {
                    line: line_no,
                    field: FIELDS[idx],
                    message: format!("`{}`: {e}", parts[idx]),
                })
        };
        let teleop_active = match parts[7] {
            "true" => true,
            "false" => false,
            other => {
                return Err(TelemetryError::MalformedLine {
                    line: line_no,
                    field: "teleop_active",
                    message: format!("expected `true` or `false`, got `{other}`"),
                })
            }
        };
        let event = match parts[8] {
            "-" => None,
            "C" => Some(TrialEvent::Collision),
            tag => match tag.strip_prefix("G:") {
                Some(goal_id) if !goal_id.is_empty() => {
                    Some(TrialEvent::GoalInspected(goal_id.to_string()))
                }
                _ => {
                    return Err(TelemetryError::UnknownEventTag {
                        line: line_no,
                        tag: tag.to_string(),
                    })
                }
            },
        };
        let record = TelemetryRecord {
            t: float(0)?,
            x: float(1)?,
            y: float(2)?,
            heading: float(3)?,
            v_cmd: float(4)?,
            w_cmd: float(5)?,
            head_yaw_deg: float(6)?,
            teleop_active,
            event,
        };
        if let Err(message) = record.validate() {
            return Err(TelemetryError::MalformedLine {
                line: line_no,
                field: "record",
                message,
            });
        }
        Ok(record)
    }
}

/// A point of interest the operator must inspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goal {
    pub goal_id: String,
    pub x: f64,
    pub y: f64,
    /// Inspection succeeds after dwelling within this radius, meters.
    pub inspect_radius: f64,
    /// Required continuous dwell time, seconds.
    pub dwell_s: f64,
}

/// A circular obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

/// Axis-aligned arena bounds, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arena {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Arena {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// Clamp a point onto the arena (walls stop motion).
    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.x_min, self.x_max), y.clamp(self.y_min, self.y_max))
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }
}

/// The shared task: arena, ordered goals, obstacles, and model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub arena: Arena,
    /// Ordered points of interest; the task's shared-goal structure.
    pub goals: Vec<Goal>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub params: ModelParams,
}

impl TaskConfig {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        let a = &self.arena;
        if !(a.x_min.is_finite() && a.x_max.is_finite() && a.y_min.is_finite() && a.y_max.is_finite())
            || a.x_min >= a.x_max
            || a.y_min >= a.y_max
        {
            return Err(TelemetryError::InvalidTask(format!(
                "arena bounds are degenerate: [{}, {}] x [{}, {}]",
                a.x_min, a.x_max, a.y_min, a.y_max
            )));
        }
        let mut seen = HashSet::new();
        for goal in &self.goals {
            if goal.goal_id.is_empty() {
                return Err(TelemetryError::InvalidTask("goal with empty goal_id".into()));
            }
            if goal.goal_id.contains(',') || goal.goal_id.contains('\n') {
                return Err(TelemetryError::InvalidTask(format!(
                    "goal_id `{}` contains a comma or newline",
                    goal.goal_id
                )));
            }
            if !seen.insert(goal.goal_id.as_str()) {
                return Err(TelemetryError::InvalidTask(format!(
                    "duplicate goal_id `{}`",
                    goal.goal_id
                )));
            }
            if !a.contains(goal.x, goal.y) {
                return Err(TelemetryError::InvalidTask(format!(
                    "goal `{}` lies outside the arena",
                    goal.goal_id
                )));
            }
            if !(goal.inspect_radius > 0.0) {
                return Err(TelemetryError::InvalidTask(format!(
                    "goal `{}` must have inspect_radius > 0",
                    goal.goal_id
                )));
            }
            if !(goal.dwell_s >= 0.0) {
                return Err(TelemetryError::InvalidTask(format!(
                    "goal `{}` must have dwell_s >= 0",
                    goal.goal_id
                )));
            }
        }
        for (i, obstacle) in self.obstacles.iter().enumerate() {
            if !a.contains(obstacle.x, obstacle.y) {
                return Err(TelemetryError::InvalidTask(format!(
                    "obstacle {i} lies outside the arena"
                )));
            }
            if !(obstacle.radius > 0.0) {
                return Err(TelemetryError::InvalidTask(format!(
                    "obstacle {i} must have radius > 0"
                )));
            }
        }
        self.params
            .validate()
            .map_err(|e| TelemetryError::InvalidTask(e.to_string()))?;
        Ok(())
    }

    pub fn goal(&self, goal_id: &str) -> Option<&Goal> {
        self.goals.iter().find(|g| g.goal_id == goal_id)
    }

    pub fn goal_index(&self, goal_id: &str) -> Option<usize> {
        self.goals.iter().position(|g| g.goal_id == goal_id)
    }

    /// Load a task configuration from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self, TelemetryError> {
        let text = fs::read_to_string(path).map_err(|source| TelemetryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let task: TaskConfig =
            serde_json::from_str(&text).map_err(|e| TelemetryError::MalformedHeader {
                line: 1,
                message: e.to_string(),
            })?;
        task.validate()?;
        Ok(task)
    }
}

/// Identity of one recorded trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialMeta {
    pub operator_id: String,
    pub trial_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<String>,
}

impl TrialMeta {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        if self.operator_id.is_empty() {
            return Err(TelemetryError::InvalidMeta("operator_id is empty".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TrialHeader {
    meta: TrialMeta,
    task: TaskConfig,
}

/// Streaming reader over the record section of a trial file.
///
/// Yields records in file order and fails on the first malformed line or
/// non-monotonic timestamp.
pub struct TrialRecords<R: Read> {
    lines: io::Lines<BufReader<R>>,
    line_no: usize,
    prev_t: Option<f64>,
    goal_ids: HashSet<String>,
    path: PathBuf,
}

impl<R: Read> Iterator for TrialRecords<R> {
    type Item = Result<TelemetryRecord, TelemetryError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    return Some(Err(TelemetryError::Io {
                        path: self.path.clone(),
                        source,
                    }))
                }
            };
            self.line_no += 1;
            if line.is_empty() {
                continue;
            }
            let record = match TelemetryRecord::from_line(&line, self.line_no) {
                Ok(record) => record,
                Err(e) => return Some(Err(e)),
            };
            if let Some(prev) = self.prev_t {
                if record.t <= prev {
                    return Some(Err(TelemetryError::NonMonotonicTimestamp {
                        line: self.line_no,
                        t: record.t,
                        prev,
                    }));
                }
            }
            if let Some(TrialEvent::GoalInspected(goal_id)) = &record.event {
                if !self.goal_ids.contains(goal_id) {
                    return Some(Err(TelemetryError::UnknownGoal {
                        line: self.line_no,
                        goal_id: goal_id.clone(),
                    }));
                }
            }
            self.prev_t = Some(record.t);
            return Some(Ok(record));
        }
    }
}

/// Open a trial file: parse the header, return the record stream.
pub fn read_trial(
    path: &Path,
) -> Result<(TrialMeta, TaskConfig, TrialRecords<fs::File>), TelemetryError> {
    let file = fs::File::open(path).map_err(|source| TelemetryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();
    let header_line = match lines.next() {
        Some(Ok(line)) => line,
        Some(Err(source)) => {
            return Err(TelemetryError::Io {
                path: path.to_path_buf(),
                source,
            })
        }
        None => {
            return Err(TelemetryError::MalformedHeader {
                line: 1,
                message: "empty file (missing header)".into(),
            })
        }
    };
    let header: TrialHeader =
        serde_json::from_str(&header_line).map_err(|e| TelemetryError::MalformedHeader {
            line: 1,
            message: e.to_string(),
        })?;
    header.meta.validate()?;
    header.task.validate()?;
    let goal_ids = header
        .task
        .goals
        .iter()
        .map(|g| g.goal_id.clone())
        .collect();
    Ok((
        header.meta,
        header.task,
        TrialRecords {
            lines,
            line_no: 1,
            prev_t: None,
            goal_ids,
            path: path.to_path_buf(),
        },
    ))
}

/// Read a whole trial into memory.
pub fn read_trial_vec(
    path: &Path,
) -> Result<(TrialMeta, TaskConfig, Vec<TelemetryRecord>), TelemetryError> {
    let (meta, task, records) = read_trial(path)?;
    let records: Vec<TelemetryRecord> = records.collect::<Result<_, _>>()?;
    Ok((meta, task, records))
}

/// Serialize a trial to its on-disk text form.
///
/// All invariants are checked before any output is produced.
pub fn trial_to_string(
    meta: &TrialMeta,
    task: &TaskConfig,
    records: &[TelemetryRecord],
) -> Result<String, TelemetryError> {
    meta.validate()?;
    task.validate()?;
    let mut prev_t: Option<f64> = None;
    for (index, record) in records.iter().enumerate() {
        record
            .validate()
            .map_err(|message| TelemetryError::InvalidRecord { index, message })?;
        if let Some(prev) = prev_t {
            if record.t <= prev {
                return Err(TelemetryError::InvalidRecord {
                    index,
                    message: format!(
                        "non-monotonic timestamp {} (previous record at {})",
                        record.t, prev
                    ),
                });
            }
        }
        if let Some(TrialEvent::GoalInspected(goal_id)) = &record.event {
            if task.goal(goal_id).is_none() {
                return Err(TelemetryError::InvalidRecord {
                    index,
                    message: format!("event references unknown goal `{goal_id}`"),
                });
            }
        }
        prev_t = Some(record.t);
    }

    let header = TrialHeader {
        meta: meta.clone(),
        task: task.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for record in records {
        out.push_str(&record.to_line());
        out.push('\n');
    }
    Ok(out)
}

/// Validate and write a trial file; no bytes are written if any record is
/// invalid.
pub fn write_trial(
    path: &Path,
    meta: &TrialMeta,
    task: &TaskConfig,
    records: &[TelemetryRecord],
) -> Result<(), TelemetryError> {
    let text = trial_to_string(meta, task, records)?;
    fs::write(path, text.as_bytes()).map_err(|source| TelemetryError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Replay schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pacing {
    /// Yield records as fast as the consumer pulls them.
    Unpaced,
    /// Yield record k no earlier than `(t_k - t_0) / rate` after the first
    /// yield, against a monotone clock. `rate` 1.0 is real time; 2.0 plays
    /// twice as fast. Must be finite and positive.
    Paced { rate: f64 },
}

/// Iterator adapter that replays time-ordered records under a pacing mode.
///
/// Pacing affects only the wall-clock time of each yield; the record
/// sequence is passed through unchanged.
pub struct Replay<I> {
    inner: I,
    pacing: Pacing,
    origin: Option<(Instant, f64)>,
}

/// Replay `records` under `pacing`.
///
/// Panics if a paced rate is not finite and positive.
pub fn replay<I>(records: I, pacing: Pacing) -> Replay<I::IntoIter>
where
    I: IntoIterator<Item = TelemetryRecord>,
{
    if let Pacing::Paced { rate } = pacing {
        assert!(
            rate.is_finite() && rate > 0.0,
            "paced replay rate must be finite and positive, got {rate}"
        );
    }
    Replay {
        inner: records.into_iter(),
        pacing,
        origin: None,
    }
}

impl<I: Iterator<Item = TelemetryRecord>> Iterator for Replay<I> {
    type Item = TelemetryRecord;

    fn next(&mut self) -> Option<Self::Item> {
        let record = self.inner.next()?;
        if let Pacing::Paced { rate } = self.pacing {
            match self.origin {
                None => self.origin = Some((Instant::now(), record.t)),
                Some((start, t0)) => {
                    let target = start + Duration::from_secs_f64((record.t - t0) / rate);
                    let now = Instant::now();
                    if target > now {
                        std::thread::sleep(target - now);
                    }
                }
            }
        }
        Some(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator;
    use proptest::prelude::*;

    fn sample_record(t: f64) -> TelemetryRecord {
        TelemetryRecord {
            t,
            x: 1.25,
            y: -0.5,
            heading: 0.75,
            v_cmd: 0.9,
            w_cmd: -0.125,
            head_yaw_deg: 4.5,
            teleop_active: true,
            event: None,
        }
    }

    fn sample_trial() -> (TrialMeta, TaskConfig) {
        let meta = TrialMeta {
            operator_id: "op-1".into(),
            trial_id: "trial-1".into(),
            seed: Some(7),
            archetype: Some("Average".into()),
        };
        (meta, simulator::default_task())
    }

    #[test]
    fn header_only_trial_reads_as_empty_stream() {
        let (meta, task) = sample_trial();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.trial");
        write_trial(&path, &meta, &task, &[]).unwrap();
        let (meta2, task2, records) = read_trial_vec(&path).unwrap();
        assert_eq!(meta2, meta);
        assert_eq!(task2, task);
        assert!(records.is_empty());
    }

    #[test]
    fn three_record_round_trip_is_bit_identical() {
        let (meta, task) = sample_trial();
        let records = vec![
            sample_record(0.0),
            TelemetryRecord {
                event: Some(TrialEvent::Collision),
                ..sample_record(0.1)
            },
            TelemetryRecord {
                event: Some(TrialEvent::GoalInspected("poi-1".into())),
                v_cmd: -0.3,
                heading: std::f64::consts::PI,
                ..sample_record(0.30000000000000004)
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trip.trial");
        write_trial(&path, &meta, &task, &records).unwrap();
        let (meta2, task2, records2) = read_trial_vec(&path).unwrap();
        assert_eq!(meta2, meta);
        assert_eq!(task2, task);
        assert_eq!(records2, records);
        // And the file itself is stable under rewrite.
        let first = fs::read(&path).unwrap();
        write_trial(&path, &meta2, &task2, &records2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn duplicate_timestamp_is_rejected_on_read() {
        let (meta, task) = sample_trial();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.trial");
        let mut text = trial_to_string(&meta, &task, &[sample_record(1.0)]).unwrap();
        text.push_str(&sample_record(1.0).to_line());
        text.push('\n');
        fs::write(&path, text).unwrap();
        let (_, _, records) = read_trial(&path).unwrap();
        let items: Vec<_> = records.collect();
        assert!(items[0].is_ok());
        match &items[1] {
            Err(TelemetryError::NonMonotonicTimestamp { t, prev, line }) => {
                assert_eq!(*t, 1.0);
                assert_eq!(*prev, 1.0);
                assert_eq!(*line, 3);
            }
            other => panic!("expected non-monotonic error, got {other:?}"),
        }
    }

    #[test]
    fn negative_head_yaw_is_rejected_before_writing() {
        let (meta, task) = sample_trial();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.trial");
        let record = TelemetryRecord {
            head_yaw_deg: -1.0,
            ..sample_record(0.0)
        };
        let err = write_trial(&path, &meta, &task, &[record]).unwrap_err();
        assert!(err.to_string().contains("head_yaw_deg"));
        assert!(!path.exists(), "no bytes may be written on invariant failure");
    }

    #[test]
    fn unknown_event_tag_is_rejected_with_tag_name() {
        let (meta, task) = sample_trial();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tag.trial");
        let mut text = trial_to_string(&meta, &task, &[]).unwrap();
        text.push_str("0.5,1,1,0,0.2,0,3,true,X\n");
        fs::write(&path, text).unwrap();
        let (_, _, records) = read_trial(&path).unwrap();
        let err = records.collect::<Result<Vec<_>, _>>().unwrap_err();
        match err {
            TelemetryError::UnknownEventTag { tag, line } => {
                assert_eq!(tag, "X");
                assert_eq!(line, 2);
            }
            other => panic!("expected unknown tag error, got {other:?}"),
        }
    }

    #[test]
    fn event_for_unknown_goal_is_rejected() {
        let (meta, task) = sample_trial();
        let record = TelemetryRecord {
            event: Some(TrialEvent::GoalInspected("nope".into())),
            ..sample_record(0.0)
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("goal.trial");
        let err = write_trial(&path, &meta, &task, &[record]).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn malformed_field_names_line_and_field() {
        let (meta, task) = sample_trial();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mal.trial");
        let mut text = trial_to_string(&meta, &task, &[]).unwrap();
        text.push_str("0.1,oops,1,0,0.2,0,3,true,-\n");
        fs::write(&path, text).unwrap();
        let (_, _, records) = read_trial(&path).unwrap();
        let err = records.collect::<Result<Vec<_>, _>>().unwrap_err();
        match err {
            TelemetryError::MalformedLine { line, field, .. } => {
                assert_eq!(line, 2);
                assert_eq!(field, "x");
            }
            other => panic!("expected malformed line error, got {other:?}"),
        }
    }

    #[test]
    fn unpaced_replay_preserves_sequence() {
        let records: Vec<_> = (0..50).map(|k| sample_record(k as f64 * 0.1)).collect();
        let replayed: Vec<_> = replay(records.clone(), Pacing::Unpaced).collect();
        assert_eq!(replayed, records);
    }

    #[test]
    fn paced_replay_honors_the_schedule() {
        let records = vec![sample_record(0.0), sample_record(0.2)];
        let start = Instant::now();
        let n = replay(records.clone(), Pacing::Paced { rate: 1.0 }).count();
        assert_eq!(n, 2);
        assert!(start.elapsed() >= Duration::from_millis(190));

        // Doubling the rate halves the schedule.
        let start = Instant::now();
        let replayed: Vec<_> = replay(records, Pacing::Paced { rate: 2.0 }).collect();
        let elapsed = start.elapsed();
        assert_eq!(replayed.len(), 2);
        assert!(elapsed >= Duration::from_millis(90));
        assert!(elapsed < Duration::from_millis(190));
    }

    proptest! {
        /// Record lines survive the text round trip field-exactly.
        #[test]
        fn record_line_round_trip(
            t in 0.0..1e4f64,
            x in -100.0..100.0f64,
            y in -100.0..100.0f64,
            heading in -3.1..=3.14159f64,
            v in -2.0..2.0f64,
            w in -3.0..3.0f64,
            ha in 0.0..=180.0f64,
            teleop: bool,
            event_pick in 0u8..3,
        ) {
            let record = TelemetryRecord {
                t, x, y, heading,
                v_cmd: v,
                w_cmd: w,
                head_yaw_deg: ha,
                teleop_active: teleop,
                event: match event_pick {
                    0 => None,
                    1 => Some(TrialEvent::Collision),
                    _ => Some(TrialEvent::GoalInspected("poi-2".into())),
                },
            };
            let parsed = TelemetryRecord::from_line(&record.to_line(), 1).unwrap();
            prop_assert_eq!(parsed, record);
        }

        /// Replay never reorders, drops, or duplicates.
        #[test]
        fn replay_is_the_identity_on_sequences(n in 0usize..200) {
            let records: Vec<_> = (0..n).map(|k| sample_record(k as f64 * 0.05)).collect();
            let out: Vec<_> = replay(records.clone(), Pacing::Unpaced).collect();
            prop_assert_eq!(out, records);
        }
    }
}
