//! Deterministic synthetic trial generator.
//!
//! Operator archetypes of differing capability drive a unicycle robot
//! through an arena of goals and obstacles at a fixed 10 Hz step,
//! producing complete telemetry with attention lapses, collisions, missed
//! inspections, detours, and an optional non-teleop idle prefix. The
//! record stream is a pure function of (task, archetype, seed).
//!
//! Randomness comes from a single seeded ChaCha8 stream with a fixed draw
//! order: (1) idle-prefix duration at trial start; (2) per target
//! acquisition: detour Bernoulli, then waypoint coordinates
//! (rejection-resampled away from obstacles), then skip Bernoulli; (3) per
//! step while teleoperating: lapse-start Bernoulli (then duration, yaw
//! band value, driving Bernoulli when one starts), one head-yaw normal,
//! one steering normal; (4) collision Bernoulli at each obstacle-influence
//! entry.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom;
use crate::telemetry::{
    Arena, Goal, Obstacle, TaskConfig, TelemetryError, TelemetryRecord, TrialEvent, TrialMeta,
};

/// Simulation step, seconds.
pub const SIM_DT: f64 = 0.1;
/// Hard cap on trial duration, seconds; uninspected goals count as missed.
pub const TIME_CAP_S: f64 = 300.0;

const HEADING_GAIN: f64 = 2.5;
const MAX_TURN_RATE: f64 = 1.8;
const OBSTACLE_INFLUENCE_M: f64 = 1.0;
const ENCOUNTER_HYSTERESIS_M: f64 = 0.3;
const PUSHBACK_M: f64 = 0.05;
const DETOUR_TIMEOUT_S: f64 = 20.0;
const EVENT_SPACING_S: f64 = 0.001;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("goal `{goal_id}` lies inside an obstacle and cannot be reached")]
    GoalInsideObstacle { goal_id: String },
    #[error("invalid archetype `{name}`: {message}")]
    InvalidArchetype { name: String, message: String },
    #[error("failed to read archetype file {path}: {message}")]
    ArchetypeFile { path: String, message: String },
    #[error(transparent)]
    Task(#[from] TelemetryError),
}

/// A parameterized synthetic operator stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: String,
    /// Cruise speed, m/s.
    pub nominal_speed: f64,
    /// Std-dev of per-step steering noise, rad.
    pub heading_noise_sigma: f64,
    /// Attention lapses per minute while teleoperating.
    pub lapse_rate_per_min: f64,
    /// Lapse duration range, seconds.
    pub lapse_duration_s: (f64, f64),
    /// Head-yaw band during a lapse, degrees (straddles the attention
    /// threshold from above).
    pub lapse_yaw_deg: (f64, f64),
    /// Probability of continuing to drive through a lapse.
    pub drive_during_lapse_prob: f64,
    /// Per-goal probability of a wandering detour before approaching it.
    pub detour_prob: f64,
    /// Per obstacle-encounter probability that avoidance fails.
    pub collision_prob: f64,
    /// Per-goal probability of leaving without completing the dwell.
    pub inspect_skip_prob: f64,
    /// Non-teleop time range at trial start, seconds.
    pub idle_prefix_s: (f64, f64),
}

impl Archetype {
    pub fn above_average() -> Self {
        Self {
            name: "AboveAverage".into(),
            nominal_speed: 1.2,
            heading_noise_sigma: 0.02,
            lapse_rate_per_min: 0.5,
            lapse_duration_s: (0.5, 1.0),
            lapse_yaw_deg: (30.0, 60.0),
            drive_during_lapse_prob: 0.0,
            detour_prob: 0.0,
            collision_prob: 0.0,
            inspect_skip_prob: 0.0,
            idle_prefix_s: (0.0, 2.0),
        }
    }

    pub fn average() -> Self {
        Self {
            name: "Average".into(),
            nominal_speed: 0.9,
            heading_noise_sigma: 0.08,
            lapse_rate_per_min: 2.5,
            lapse_duration_s: (1.0, 2.5),
            lapse_yaw_deg: (30.0, 60.0),
            drive_during_lapse_prob: 0.5,
            detour_prob: 0.15,
            collision_prob: 0.15,
            inspect_skip_prob: 0.05,
            idle_prefix_s: (2.0, 8.0),
        }
    }

    pub fn below_average() -> Self {
        Self {
            name: "BelowAverage".into(),
            nominal_speed: 0.7,
            heading_noise_sigma: 0.18,
            lapse_rate_per_min: 6.5,
            lapse_duration_s: (2.5, 5.0),
            lapse_yaw_deg: (30.0, 60.0),
            drive_during_lapse_prob: 0.9,
            detour_prob: 0.45,
            collision_prob: 0.55,
            inspect_skip_prob: 0.25,
            idle_prefix_s: (5.0, 15.0),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "AboveAverage" => Some(Self::above_average()),
            "Average" => Some(Self::average()),
            "BelowAverage" => Some(Self::below_average()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["AboveAverage", "Average", "BelowAverage"]
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        let fail = |message: String| SimulatorError::InvalidArchetype {
            name: self.name.clone(),
            message,
        };
        if self.name.is_empty() {
            return Err(SimulatorError::InvalidArchetype {
                name: "<unnamed>".into(),
                message: "name is empty".into(),
            });
        }
        if !(self.nominal_speed.is_finite() && self.nominal_speed > 0.0) {
            return Err(fail(format!(
                "nominal_speed must be positive, got {}",
                self.nominal_speed
            )));
        }
        if !(self.heading_noise_sigma.is_finite() && self.heading_noise_sigma >= 0.0) {
            return Err(fail("heading_noise_sigma must be >= 0".into()));
        }
        if !(self.lapse_rate_per_min.is_finite() && self.lapse_rate_per_min >= 0.0) {
            return Err(fail("lapse_rate_per_min must be >= 0".into()));
        }
        for (field, p) in [
            ("drive_during_lapse_prob", self.drive_during_lapse_prob),
            ("detour_prob", self.detour_prob),
            ("collision_prob", self.collision_prob),
            ("inspect_skip_prob", self.inspect_skip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(fail(format!("{field} must lie in [0, 1], got {p}")));
            }
        }
        for (field, (lo, hi)) in [
            ("lapse_duration_s", self.lapse_duration_s),
            ("lapse_yaw_deg", self.lapse_yaw_deg),
            ("idle_prefix_s", self.idle_prefix_s),
        ] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(fail(format!(
                    "{field} range must satisfy 0 <= lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        if self.lapse_yaw_deg.1 > 180.0 {
            return Err(fail("lapse_yaw_deg must stay within [0, 180]".into()));
        }
        Ok(())
    }

    /// Lowercase kebab form of the name, used in generated identifiers.
    pub fn slug(&self) -> String {
        let mut out = String::new();
        for (k, c) in self.name.chars().enumerate() {
            if c.is_uppercase() {
                if k > 0 {
                    out.push('-');
                }
                out.extend(c.to_lowercase());
            } else if c.is_alphanumeric() {
                out.push(c);
            } else {
                out.push('-');
            }
        }
        out
    }
}

/// Load additional archetype definitions from a JSON array file.
pub fn load_archetypes(path: &Path) -> Result<Vec<Archetype>, SimulatorError> {
    let text = fs::read_to_string(path).map_err(|e| SimulatorError::ArchetypeFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let list: Vec<Archetype> =
        serde_json::from_str(&text).map_err(|e| SimulatorError::ArchetypeFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    for archetype in &list {
        archetype.validate()?;
    }
    Ok(list)
}

/// The default desk-scale world: 20x20 m arena, four corner goals toured
/// counterclockwise, three obstacles near the first three legs.
pub fn default_task() -> TaskConfig {
    let goal = |goal_id: &str, x: f64, y: f64| Goal {
        goal_id: goal_id.into(),
        x,
        y,
        inspect_radius: 0.8,
        dwell_s: 1.0,
    };
    TaskConfig {
        arena: Arena {
            x_min: 0.0,
            y_min: 0.0,
            x_max: 20.0,
            y_max: 20.0,
        },
        goals: vec![
            goal("poi-1", 16.0, 4.0),
            goal("poi-2", 16.0, 16.0),
            goal("poi-3", 4.0, 16.0),
            goal("poi-4", 4.0, 4.0),
        ],
        obstacles: vec![
            Obstacle {
                x: 13.0,
                y: 7.0,
                radius: 1.0,
            },
            Obstacle {
                x: 16.0,
                y: 10.0,
                radius: 1.1,
            },
            Obstacle {
                x: 10.0,
                y: 16.0,
                radius: 1.0,
            },
        ],
        params: Default::default(),
    }
}

struct Lapse {
    until: f64,
    yaw_deg: f64,
    driving: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    Travel,
    Detour,
    Dwell { since: f64 },
}

#[derive(Default, Clone, Copy)]
struct Encounter {
    in_influence: bool,
    avoidance_failed: bool,
    collided: bool,
}

struct Sim<'a> {
    task: &'a TaskConfig,
    archetype: &'a Archetype,
    rng: ChaCha8Rng,
    x: f64,
    y: f64,
    heading: f64,
    phase: Phase,
    idle_until: f64,
    goal_done: Vec<bool>,
    target: Option<usize>,
    skip_current: bool,
    detour_point: Option<(f64, f64)>,
    detour_deadline: f64,
    lapse: Option<Lapse>,
    encounters: Vec<Encounter>,
}

impl<'a> Sim<'a> {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.gen::<f64>()
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.gen::<f64>() < p
    }

    fn normal(&mut self) -> f64 {
        // Box-Muller; u1 is kept away from zero for the logarithm.
        let mut u1: f64 = self.rng.gen();
        while u1 <= f64::MIN_POSITIVE {
            u1 = self.rng.gen();
        }
        let u2: f64 = self.rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Pick the next uninspected goal and draw its behavior plan.
    fn acquire_target(&mut self) {
        self.target = self.goal_done.iter().position(|&done| !done);
        self.skip_current = false;
        self.detour_point = None;
        if let Some(_idx) = self.target {
            if self.bernoulli(self.archetype.detour_prob) {
                self.detour_point = Some(self.draw_waypoint());
            }
            self.skip_current = self.bernoulli(self.archetype.inspect_skip_prob);
        }
    }

    /// A wander target inside the arena, away from obstacle disks.
    fn draw_waypoint(&mut self) -> (f64, f64) {
        let a = self.task.arena;
        let margin = 1.0;
        let mut point = (a.x_min + margin, a.y_min + margin);
        for _ in 0..100 {
            let x = self.uniform(a.x_min + margin, a.x_max - margin);
            let y = self.uniform(a.y_min + margin, a.y_max - margin);
            point = (x, y);
            let clear = self
                .task
                .obstacles
                .iter()
                .all(|o| geom::distance(x, y, o.x, o.y) > o.radius + 0.5);
            if clear {
                break;
            }
        }
        point
    }

    /// Steering target for this step: detour waypoint or the goal.
    fn nav_point(&self) -> Option<(f64, f64)> {
        if let Some(p) = self.detour_point {
            return Some(p);
        }
        self.target.map(|idx| {
            let g = &self.task.goals[idx];
            (g.x, g.y)
        })
    }

    /// Desired heading toward `point`, deflected around obstacles unless
    /// avoidance failed for the nearest encounter.
    fn desired_heading(&self, point: (f64, f64)) -> f64 {
        let to_goal = geom::bearing(self.x, self.y, point.0, point.1);
        let mut best: Option<(f64, usize)> = None;
        for (k, o) in self.task.obstacles.iter().enumerate() {
            let d = geom::distance(self.x, self.y, o.x, o.y);
            let reach = o.radius + OBSTACLE_INFLUENCE_M;
            if d > reach {
                continue;
            }
            if self.encounters[k].avoidance_failed {
                continue;
            }
            // Only obstacles roughly ahead matter.
            let rel = geom::wrap_angle(geom::bearing(self.x, self.y, o.x, o.y) - to_goal);
            if rel.abs() > PI / 2.0 {
                continue;
            }
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, k));
            }
        }
        match best {
            None => to_goal,
            Some((d, k)) => {
                let o = &self.task.obstacles[k];
                let away = geom::bearing(o.x, o.y, self.x, self.y);
                let side = if geom::wrap_angle(away - to_goal) >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                let proximity =
                    ((o.radius + OBSTACLE_INFLUENCE_M - d) / OBSTACLE_INFLUENCE_M).clamp(0.0, 1.0);
                geom::wrap_angle(to_goal + side * 1.3 * proximity)
            }
        }
    }
}

/// Generate one trial.
///
/// The output is deterministic given (task, archetype, seed): generating
/// twice yields bit-identical record streams.
pub fn generate_trial(
    task: &TaskConfig,
    archetype: &Archetype,
    seed: u64,
) -> Result<(TrialMeta, Vec<TelemetryRecord>), SimulatorError> {
    task.validate()?;
    archetype.validate()?;
    for goal in &task.goals {
        for obstacle in &task.obstacles {
            if geom::distance(goal.x, goal.y, obstacle.x, obstacle.y) <= obstacle.radius {
                return Err(SimulatorError::GoalInsideObstacle {
                    goal_id: goal.goal_id.clone(),
                });
            }
        }
    }

    let (sx, sy) = task.arena.center();
    let mut sim = Sim {
        task,
        archetype,
        rng: ChaCha8Rng::seed_from_u64(seed),
        x: sx,
        y: sy,
        heading: 0.0,
        phase: Phase::Idle,
        idle_until: 0.0,
        goal_done: vec![false; task.goals.len()],
        target: None,
        skip_current: false,
        detour_point: None,
        detour_deadline: 0.0,
        lapse: None,
        encounters: vec![Encounter::default(); task.obstacles.len()],
    };
    sim.idle_until = sim.uniform(archetype.idle_prefix_s.0, archetype.idle_prefix_s.1);
    sim.acquire_target();
    if sim.detour_point.is_some() {
        sim.detour_deadline = sim.idle_until + DETOUR_TIMEOUT_S;
    }

    let mut records: Vec<TelemetryRecord> = Vec::new();
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * SIM_DT;
        if t > TIME_CAP_S {
            break;
        }
        let teleop_active = t >= sim.idle_until;

        // Lapse state machine (attention model) while teleoperating.
        if teleop_active {
            let expired = matches!(&sim.lapse, Some(l) if t >= l.until);
            if expired {
                sim.lapse = None;
            }
            if sim.lapse.is_none() {
                let start_prob = archetype.lapse_rate_per_min / 60.0 * SIM_DT;
                if sim.bernoulli(start_prob) {
                    let duration =
                        sim.uniform(archetype.lapse_duration_s.0, archetype.lapse_duration_s.1);
                    let yaw_deg =
                        sim.uniform(archetype.lapse_yaw_deg.0, archetype.lapse_yaw_deg.1);
                    let driving = sim.bernoulli(archetype.drive_during_lapse_prob);
                    sim.lapse = Some(Lapse {
                        until: t + duration,
                        yaw_deg,
                        driving,
                    });
                }
            }
        }

        // One head-yaw draw per step: band value during a lapse, low noise
        // otherwise.
        let yaw_noise = sim.normal();
        let head_yaw_deg = match &sim.lapse {
            Some(l) => (l.yaw_deg + 1.5 * yaw_noise)
                .clamp(archetype.lapse_yaw_deg.0, archetype.lapse_yaw_deg.1),
            None => (3.0 * yaw_noise).abs().min(9.5),
        };

        // Phase transitions at the current pose.
        if teleop_active {
            if sim.phase == Phase::Idle {
                sim.phase = Phase::Travel;
            }
            if sim.detour_point.is_some() {
                sim.phase = Phase::Detour;
            }
            match sim.phase {
                Phase::Detour => {
                    let (wx, wy) = sim.detour_point.expect("detour point set");
                    if geom::distance(sim.x, sim.y, wx, wy) <= 0.8 || t >= sim.detour_deadline {
                        sim.detour_point = None;
                        sim.phase = Phase::Travel;
                    }
                }
                Phase::Travel => {
                    if let Some(idx) = sim.target {
                        let g = &task.goals[idx];
                        let d = geom::distance(sim.x, sim.y, g.x, g.y);
                        if sim.skip_current {
                            if d <= 2.0 * g.inspect_radius {
                                // Leaves without inspecting.
                                sim.goal_done[idx] = true;
                                sim.acquire_target();
                                if sim.detour_point.is_some() {
                                    sim.detour_deadline = t + DETOUR_TIMEOUT_S;
                                }
                            }
                        } else if d <= 0.6 * g.inspect_radius {
                            sim.phase = Phase::Dwell { since: t };
                        }
                    }
                }
                Phase::Dwell { .. } | Phase::Idle => {}
            }
        }

        // Events detected at this pose.
        let mut events: Vec<TrialEvent> = Vec::new();
        let mut pushback: Option<usize> = None;
        if teleop_active {
            for (k, o) in task.obstacles.iter().enumerate() {
                let d = geom::distance(sim.x, sim.y, o.x, o.y);
                let influence = o.radius + OBSTACLE_INFLUENCE_M;
                if d <= influence && !sim.encounters[k].in_influence {
                    sim.encounters[k].in_influence = true;
                    sim.encounters[k].collided = false;
                    sim.encounters[k].avoidance_failed =
                        sim.bernoulli(archetype.collision_prob);
                }
                if d > influence + ENCOUNTER_HYSTERESIS_M && sim.encounters[k].in_influence {
                    sim.encounters[k] = Encounter::default();
                }
                if d <= o.radius && !sim.encounters[k].collided {
                    sim.encounters[k].collided = true;
                    sim.encounters[k].avoidance_failed = false;
                    events.push(TrialEvent::Collision);
                    pushback = Some(k);
                }
            }

            if let Phase::Dwell { since } = sim.phase {
                if let Some(idx) = sim.target {
                    let g = &task.goals[idx];
                    let d = geom::distance(sim.x, sim.y, g.x, g.y);
                    if d > g.inspect_radius {
                        // Wandered out mid-dwell (lapse driving); restart later.
                        sim.phase = Phase::Travel;
                    } else if t - since >= g.dwell_s - 1e-9 {
                        events.push(TrialEvent::GoalInspected(g.goal_id.clone()));
                        sim.goal_done[idx] = true;
                        sim.acquire_target();
                        if sim.detour_point.is_some() {
                            sim.detour_deadline = t + DETOUR_TIMEOUT_S;
                        }
                        sim.phase = Phase::Travel;
                    }
                }
            }
        }

        // Commands for this step.
        let steer_noise = sim.normal();
        let lapse_driving = matches!(&sim.lapse, Some(l) if l.driving);
        let lapse_stalled = teleop_active && sim.lapse.is_some() && !lapse_driving;
        let (v_cmd, w_cmd) = if !teleop_active || lapse_stalled {
            (0.0, 0.0)
        } else {
            match sim.phase {
                Phase::Dwell { .. } => {
                    if lapse_driving {
                        // Blind creep while not attending the screen.
                        (0.3 * archetype.nominal_speed, steer_noise)
                    } else {
                        (0.0, 0.0)
                    }
                }
                _ => match sim.nav_point() {
                    None => (0.0, 0.0),
                    Some(point) => {
                        let desired = sim.desired_heading(point);
                        let noise_scale = if lapse_driving { 3.0 } else { 1.0 };
                        let err = geom::wrap_angle(desired - sim.heading)
                            + archetype.heading_noise_sigma * noise_scale * steer_noise;
                        let w = (HEADING_GAIN * err).clamp(-MAX_TURN_RATE, MAX_TURN_RATE);
                        let v = archetype.nominal_speed * (1.0 - 0.65 * err.abs().min(1.0));
                        (v, w)
                    }
                },
            }
        };

        // Emit the record (extra same-step events land on follow-up records
        // an epsilon later, keeping timestamps strictly increasing).
        let finished = sim.target.is_none();
        let mut event_iter = events.into_iter();
        let first_event = event_iter.next();
        records.push(TelemetryRecord {
            t,
            x: sim.x,
            y: sim.y,
            heading: sim.heading,
            v_cmd,
            w_cmd,
            head_yaw_deg,
            teleop_active,
            event: first_event,
        });
        for (j, event) in event_iter.enumerate() {
            records.push(TelemetryRecord {
                t: t + (j as f64 + 1.0) * EVENT_SPACING_S,
                x: sim.x,
                y: sim.y,
                heading: sim.heading,
                v_cmd,
                w_cmd,
                head_yaw_deg,
                teleop_active,
                event: Some(event),
            });
        }
        if finished {
            break;
        }

        // Integrate the unicycle; walls clamp motion.
        if let Some(k) = pushback {
            let o = &task.obstacles[k];
            let d = geom::distance(sim.x, sim.y, o.x, o.y).max(1e-9);
            let scale = (o.radius + PUSHBACK_M) / d;
            let (px, py) = task.arena.clamp(
                o.x + (sim.x - o.x) * scale,
                o.y + (sim.y - o.y) * scale,
            );
            sim.x = px;
            sim.y = py;
        } else {
            let (nx, ny) = task.arena.clamp(
                sim.x + v_cmd * sim.heading.cos() * SIM_DT,
                sim.y + v_cmd * sim.heading.sin() * SIM_DT,
            );
            sim.x = nx;
            sim.y = ny;
        }
        sim.heading = geom::wrap_angle(sim.heading + w_cmd * SIM_DT);

        step += 1;
    }

    let meta = TrialMeta {
        operator_id: format!("{}-s{seed:03}", archetype.slug()),
        trial_id: format!("{}-s{seed:03}-r0", archetype.slug()),
        seed: Some(seed),
        archetype: Some(archetype.name.clone()),
    };
    Ok((meta, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom;

    #[test]
    fn same_seed_is_bit_identical() {
        let task = default_task();
        let archetype = Archetype::average();
        let (meta_a, recs_a) = generate_trial(&task, &archetype, 42).unwrap();
        let (meta_b, recs_b) = generate_trial(&task, &archetype, 42).unwrap();
        assert_eq!(meta_a, meta_b);
        assert_eq!(recs_a, recs_b);
        let (_, recs_c) = generate_trial(&task, &archetype, 43).unwrap();
        assert_ne!(recs_a, recs_c);
    }

    #[test]
    fn clean_archetype_inspects_everything_without_collisions() {
        let task = default_task();
        let archetype = Archetype::above_average();
        assert_eq!(archetype.collision_prob, 0.0);
        assert_eq!(archetype.inspect_skip_prob, 0.0);
        for seed in 0..20 {
            let (_, records) = generate_trial(&task, &archetype, seed).unwrap();
            let collisions = records
                .iter()
                .filter(|r| r.event == Some(TrialEvent::Collision))
                .count();
            let inspected = records
                .iter()
                .filter(|r| matches!(r.event, Some(TrialEvent::GoalInspected(_))))
                .count();
            assert_eq!(collisions, 0, "seed {seed}");
            assert_eq!(inspected, task.goals.len(), "seed {seed}");
        }
    }

    #[test]
    fn robot_stays_inside_the_arena() {
        let task = default_task();
        for archetype in [
            Archetype::above_average(),
            Archetype::average(),
            Archetype::below_average(),
        ] {
            let (_, records) = generate_trial(&task, &archetype, 7).unwrap();
            for r in &records {
                assert!(task.arena.contains(r.x, r.y), "({}, {}) at t={}", r.x, r.y, r.t);
            }
        }
    }

    #[test]
    fn collision_events_coincide_with_obstacle_contact() {
        let task = default_task();
        let archetype = Archetype::below_average();
        let mut found = 0;
        for seed in 0..10 {
            let (_, records) = generate_trial(&task, &archetype, seed).unwrap();
            for r in &records {
                if r.event == Some(TrialEvent::Collision) {
                    found += 1;
                    let touching = task
                        .obstacles
                        .iter()
                        .any(|o| geom::distance(r.x, r.y, o.x, o.y) <= o.radius);
                    assert!(touching, "collision at ({}, {}) t={}", r.x, r.y, r.t);
                }
            }
        }
        assert!(found > 0, "below-average trials should produce collisions");
    }

    #[test]
    fn inspections_satisfy_the_dwell_and_radius_rule() {
        let task = default_task();
        for archetype in [Archetype::above_average(), Archetype::average()] {
            for seed in 0..10 {
                let (_, records) = generate_trial(&task, &archetype, seed).unwrap();
                for (k, r) in records.iter().enumerate() {
                    if let Some(TrialEvent::GoalInspected(goal_id)) = &r.event {
                        let g = task.goal(goal_id).unwrap();
                        for prev in records[..=k].iter().rev() {
                            if prev.t < r.t - g.dwell_s {
                                break;
                            }
                            let d = geom::distance(prev.x, prev.y, g.x, g.y);
                            assert!(
                                d <= g.inspect_radius,
                                "record at t={} is {}m from `{}`",
                                prev.t,
                                d,
                                goal_id
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn timestamps_strictly_increase_with_event_spacing() {
        let task = default_task();
        let (_, records) = generate_trial(&task, &Archetype::below_average(), 3).unwrap();
        for pair in records.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }

    #[test]
    fn goal_inside_obstacle_is_a_config_error() {
        let mut task = default_task();
        task.obstacles[0].x = task.goals[0].x;
        task.obstacles[0].y = task.goals[0].y;
        let err = generate_trial(&task, &Archetype::average(), 1).unwrap_err();
        match err {
            SimulatorError::GoalInsideObstacle { goal_id } => assert_eq!(goal_id, "poi-1"),
            other => panic!("expected goal-inside-obstacle, got {other}"),
        }
    }

    #[test]
    fn capability_ordering_over_twenty_seeds() {
        let task = default_task();
        let summarize = |archetype: &Archetype| {
            let mut time = 0.0;
            let mut collisions = 0.0;
            let mut missed = 0.0;
            let n = 20;
            for seed in 0..n {
                let (_, records) = generate_trial(&task, archetype, seed).unwrap();
                time += records.last().unwrap().t;
                collisions += records
                    .iter()
                    .filter(|r| r.event == Some(TrialEvent::Collision))
                    .count() as f64;
                let inspected = records
                    .iter()
                    .filter(|r| matches!(r.event, Some(TrialEvent::GoalInspected(_))))
                    .count();
                missed += (task.goals.len() - inspected) as f64;
            }
            let n = n as f64;
            (time / n, collisions / n, missed / n)
        };
        let above = summarize(&Archetype::above_average());
        let average = summarize(&Archetype::average());
        let below = summarize(&Archetype::below_average());

        assert!(above.0 < average.0 && average.0 < below.0, "time: {above:?} {average:?} {below:?}");
        assert!(above.1 <= average.1 && average.1 < below.1, "collisions");
        assert!(above.2 <= average.2 && average.2 < below.2, "missed goals");
        assert!(below.1 > 0.0, "below-average should collide on average");
    }

    #[test]
    fn idle_prefix_keeps_the_robot_parked_and_ungated() {
        let task = default_task();
        let archetype = Archetype::below_average();
        let (_, records) = generate_trial(&task, &archetype, 11).unwrap();
        let first_active = records.iter().position(|r| r.teleop_active).unwrap();
        assert!(first_active > 0, "below-average idles at the start");
        let start = (records[0].x, records[0].y);
        for r in &records[..first_active] {
            assert!(!r.teleop_active);
            assert_eq!((r.x, r.y), start);
            assert_eq!(r.v_cmd, 0.0);
        }
    }

    #[test]
    fn archetype_slugs_are_kebab_case() {
        assert_eq!(Archetype::above_average().slug(), "above-average");
        assert_eq!(Archetype::below_average().slug(), "below-average");
    }

    #[test]
    fn archetype_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("archetypes.json");
        let list = vec![Archetype::average(), Archetype::below_average()];
        std::fs::write(&path, serde_json::to_string_pretty(&list).unwrap()).unwrap();
        let loaded = load_archetypes(&path).unwrap();
        assert_eq!(loaded, list);
    }
}
