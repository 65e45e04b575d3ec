//! The two derived model inputs: navigational intent `i` and goal-directed
//! motion error `p`.
//!
//! Intent is a Bayesian posterior over the task's uninspected goals. Each
//! motion sample multiplies the (uniform-mixed) prior by a von-Mises-style
//! likelihood of the heading pointing at each goal; `i` is the posterior
//! mass on the next uninspected goal in task order — the designated shared
//! goal — not the max-posterior goal.
//!
//! Motion error compares actual progress toward the active goal against the
//! commanded path length over a sliding window: `p = clamp(1 - actual/ideal)`
//! with `ideal` the time integral of |v_cmd| and `actual` the drop in
//! straight-line goal distance across the window. Degenerate windows (ideal
//! below `eps_d`) hold the previous value.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom;
use crate::telemetry::{TaskConfig, TelemetryRecord, TrialEvent};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("intent estimator: {0} must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("intent estimator: eps_mix must lie in [0, 1], got {0}")]
    EpsMixOutOfRange(f64),
}

/// Bayesian intent estimator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntentParams {
    /// Likelihood concentration on heading alignment.
    pub beta: f64,
    /// Uniform-mixing factor per update; keeps the posterior recoverable.
    pub eps_mix: f64,
    /// Minimum |v_cmd| for an update, m/s; heading is uninformative when
    /// stationary.
    pub v_min: f64,
}

impl Default for IntentParams {
    fn default() -> Self {
        Self {
            beta: 2.0,
            eps_mix: 0.01,
            v_min: 0.05,
        }
    }
}

impl IntentParams {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(SignalError::NonPositive("beta", self.beta));
        }
        if !(0.0..=1.0).contains(&self.eps_mix) || !self.eps_mix.is_finite() {
            return Err(SignalError::EpsMixOutOfRange(self.eps_mix));
        }
        if !(self.v_min.is_finite() && self.v_min > 0.0) {
            return Err(SignalError::NonPositive("v_min", self.v_min));
        }
        Ok(())
    }
}

/// Motion-error estimator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionErrorParams {
    /// Sliding window length, seconds.
    pub window_s: f64,
    /// Minimum ideal displacement for a defined update, meters.
    pub eps_d: f64,
}

impl Default for MotionErrorParams {
    fn default() -> Self {
        Self {
            window_s: 2.0,
            eps_d: 0.01,
        }
    }
}

impl MotionErrorParams {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.window_s.is_finite() && self.window_s > 0.0) {
            return Err(SignalError::NonPositive("window_s", self.window_s));
        }
        if !(self.eps_d.is_finite() && self.eps_d > 0.0) {
            return Err(SignalError::NonPositive("eps_d", self.eps_d));
        }
        Ok(())
    }
}

/// Posterior over the task's uninspected goals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentState {
    params: IntentParams,
    /// Mass per goal, aligned with task order; zero for inspected goals.
    posterior: Vec<f64>,
    inspected: Vec<bool>,
    /// Index of the next uninspected goal in task order.
    active_goal: Option<usize>,
}

impl IntentState {
    pub fn new(task: &TaskConfig) -> Self {
        let n = task.goals.len();
        let mass = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        Self {
            params: task.params.intent_estimator,
            posterior: vec![mass; n],
            inspected: vec![false; n],
            active_goal: if n > 0 { Some(0) } else { None },
        }
    }

    /// Posterior mass per goal, in task order (zero for inspected goals).
    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// Index of the active (next uninspected) goal, if any remain.
    pub fn active_goal(&self) -> Option<usize> {
        self.active_goal
    }

    fn retire(&mut self, idx: usize) {
        if self.inspected[idx] {
            return;
        }
        self.inspected[idx] = true;
        self.posterior[idx] = 0.0;
        let remaining: f64 = self.posterior.iter().sum();
        let uninspected: Vec<usize> = (0..self.posterior.len())
            .filter(|&i| !self.inspected[i])
            .collect();
        if uninspected.is_empty() {
            self.active_goal = None;
            return;
        }
        if remaining > 0.0 && remaining.is_finite() {
            for &i in &uninspected {
                self.posterior[i] /= remaining;
            }
        } else {
            let mass = 1.0 / uninspected.len() as f64;
            for &i in &uninspected {
                self.posterior[i] = mass;
            }
        }
        self.active_goal = Some(uninspected[0]);
    }

    /// Advance the posterior with one record and return `i`, the mass on
    /// the active goal.
    ///
    /// A `GoalInspected` event retires its goal before the motion update;
    /// a stationary record (|v_cmd| < v_min) leaves the posterior
    /// untouched. With no uninspected goals left, `i` is 1 (task
    /// complete, inputs saturate benignly).
    pub fn update(&mut self, rec: &TelemetryRecord, task: &TaskConfig) -> f64 {
        if let Some(TrialEvent::GoalInspected(goal_id)) = &rec.event {
            if let Some(idx) = task.goal_index(goal_id) {
                self.retire(idx);
            }
        }
        let active = match self.active_goal {
            Some(active) => active,
            None => return 1.0,
        };
        if rec.v_cmd.abs() < self.params.v_min {
            return self.posterior[active];
        }

        let motion_direction = if rec.v_cmd >= 0.0 {
            rec.heading
        } else {
            rec.heading + std::f64::consts::PI
        };
        let support: Vec<usize> = (0..self.posterior.len())
            .filter(|&i| !self.inspected[i])
            .collect();
        let uniform = 1.0 / support.len() as f64;
        let mut weights = vec![0.0; support.len()];
        let mut total = 0.0;
        for (k, &idx) in support.iter().enumerate() {
            let goal = &task.goals[idx];
            let bearing = geom::bearing(rec.x, rec.y, goal.x, goal.y);
            let alignment = (bearing - motion_direction).cos();
            let prior = (1.0 - self.params.eps_mix) * self.posterior[idx]
                + self.params.eps_mix * uniform;
            let w = prior * (self.params.beta * alignment).exp();
            weights[k] = w;
            total += w;
        }
        if total > 0.0 && total.is_finite() {
            for (k, &idx) in support.iter().enumerate() {
                self.posterior[idx] = weights[k] / total;
            }
        }
        self.posterior[active]
    }
}

/// Sliding-window goal-progress error.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionErrorState {
    params: MotionErrorParams,
    /// Time-ordered (t, distance-to-active-goal, |v_cmd|) samples spanning
    /// at most the window.
    buffer: VecDeque<(f64, f64, f64)>,
    last_p: f64,
}

impl MotionErrorState {
    pub fn new(task: &TaskConfig) -> Self {
        Self::with_params(task.params.motion_error)
    }

    pub fn with_params(params: MotionErrorParams) -> Self {
        Self {
            params,
            buffer: VecDeque::new(),
            // Neutral starting error: maps to confidence 0.5.
            last_p: 0.5,
        }
    }

    pub fn last(&self) -> f64 {
        self.last_p
    }

    /// Advance the window with one record and return `p`.
    ///
    /// `active_goal` is the goal the distance is measured against; with the
    /// task complete (no goal) the window is left untouched and the last
    /// value holds.
    pub fn update(&mut self, rec: &TelemetryRecord, task: &TaskConfig, active_goal: Option<usize>) -> f64 {
        let goal = match active_goal.and_then(|idx| task.goals.get(idx)) {
            Some(goal) => goal,
            None => return self.last_p,
        };
        let dist = geom::distance(rec.x, rec.y, goal.x, goal.y);
        self.buffer.push_back((rec.t, dist, rec.v_cmd.abs()));
        let horizon = rec.t - self.params.window_s;
        while let Some(&(t0, _, _)) = self.buffer.front() {
            if t0 < horizon {
                self.buffer.pop_front();
            } else {
                break;
            }
        }
        if self.buffer.len() >= 2 {
            let mut ideal = 0.0;
            for pair in self.buffer.iter().zip(self.buffer.iter().skip(1)) {
                let (&(ta, _, va), &(tb, _, vb)) = pair;
                ideal += 0.5 * (va + vb) * (tb - ta);
            }
            if ideal >= self.params.eps_d {
                let first = self.buffer.front().expect("nonempty").1;
                let last = self.buffer.back().expect("nonempty").1;
                let actual = first - last;
                self.last_p = (1.0 - actual / ideal).clamp(0.0, 1.0);
            }
        }
        self.last_p
    }
}
