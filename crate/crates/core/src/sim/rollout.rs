//! Rollout execution: follow the field from a start until the goal is
//! reached, a part touches an obstacle, progress stops, or time runs out.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::agent::{derive_parts, AgentModel, AgentState};
use super::follower::{step_with_queries, weighted_queries, Weighting};
use super::trace::{PartRecord, TraceRecord};
use super::SimError;
use crate::field::{build_field_with, BodyPartState, FieldParams, FieldQuery, GoalRegion, HumanoidField};
use crate::scene::SceneManifest;
use crate::vmf::{derive_prior, r_field, MotionSample, VmfPrior};
use crate::voxel::{OccupancyGrid, ScalarField, Trilinear, DEFAULT_VOXEL_BUDGET};

/// Rooms up to this size use the fixed time limit.
const BASE_ROOM: f64 = 5.0;
/// Time budget per second of straight-line travel in larger rooms.
const TIME_SLACK: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub dt: f64,
    pub time_limit: f64,
    /// 2D root-to-goal distance that counts as arrival, metres.
    pub success_radius: f64,
    /// Stalled when the root moves less than `stall_distance` over
    /// `stall_window` seconds.
    pub stall_window: f64,
    pub stall_distance: f64,
    pub goal_region: GoalRegion,
    pub weighting: Weighting,
    /// Follow the potential uphill (diagnostic).
    pub reverse_field: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            time_limit: 5.0,
            success_radius: 0.1,
            stall_window: 1.0,
            stall_distance: 1e-4,
            goal_region: GoalRegion::Column,
            weighting: Weighting::Priority,
            reverse_field: false,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return bad("dt must lie in (0, 0.1]");
        }
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            return bad("time_limit must be positive");
        }
        if !(self.success_radius >= 0.0 && self.stall_window > 0.0 && self.stall_distance >= 0.0) {
            return bad("success_radius, stall_window and stall_distance must be non-negative");
        }
        if let Weighting::ConstantUrgency(w) = self.weighting {
            if !(w.is_finite() && w >= 0.0) {
                return bad("constant urgency must be finite and >= 0");
            }
        }
        Ok(())
    }

    /// Time limit for a run of straight-line length `distance` in a room of
    /// horizontal `extent`.
    pub fn limit_for(&self, distance: f64, max_speed: f64, extent: f64) -> f64 {
        if extent > BASE_ROOM + 1e-9 {
            self.time_limit.max(TIME_SLACK * distance / max_speed)
        } else {
            self.time_limit
        }
    }

    fn steps(&self, seconds: f64) -> usize {
        (seconds / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Termination {
    Reached,
    Timeout,
    Collision,
    Stalled,
}

/// State at the start of a control step, the queries taken there, and the
/// reward of the motion that followed.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub t: f64,
    pub state: AgentState,
    pub queries: Vec<FieldQuery>,
    pub r_field: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub success: bool,
    pub collided: bool,
    pub time_used: f64,
    /// Closest 2D approach of the root to the goal, metres.
    pub de: f64,
    pub termination: Termination,
    pub trajectory: Vec<TraceStep>,
    pub final_state: AgentState,
    /// Smallest `sdf - radius` seen over all parts and checked states.
    pub min_clearance: f64,
    pub time_limit: f64,
}

impl RolloutResult {
    pub fn records(&self) -> Vec<TraceRecord> {
        self.trajectory
            .iter()
            .map(|s| TraceRecord {
                t: s.t,
                root_xy: s.state.root_xy,
                height_scale: s.state.height_scale,
                lean: s.state.lean,
                parts: s
                    .queries
                    .iter()
                    .map(|q| PartRecord { pos: q.part.position.into(), f_h: q.f_h.into(), kappa: q.kappa })
                    .collect(),
                r_field: s.r_field,
            })
            .collect()
    }

    pub fn mean_r_field(&self) -> f64 {
        if self.trajectory.is_empty() {
            return 0.0;
        }
        self.trajectory.iter().map(|s| s.r_field).sum::<f64>() / self.trajectory.len() as f64
    }
}

/// Smallest `sdf - radius` over `parts`; `-inf` if a part leaves the grid.
pub fn clearance(sdf: &ScalarField, parts: &[BodyPartState]) -> f64 {
    parts
        .iter()
        .map(|p| sdf.sample(&p.position).map_or(f64::NEG_INFINITY, |d| d - p.radius))
        .fold(f64::INFINITY, f64::min)
}

/// True iff some part's sampled distance is below its radius. Parts outside
/// the grid count as colliding.
pub fn check_collision(sdf: &ScalarField, parts: &[BodyPartState]) -> bool {
    clearance(sdf, parts) < 0.0
}

/// Reward of moving with the velocities of `next` under the priors taken at
/// the previous step.
pub fn step_reward(model: &AgentModel, priors: &[VmfPrior], next: &AgentState) -> Result<f64, SimError> {
    let motion: Vec<MotionSample> =
        derive_parts(model, next).iter().map(|p| MotionSample::from_velocity(&p.velocity)).collect();
    Ok(r_field(priors, &motion)?)
}

/// Roll out from `start` toward the goal `field` was built for.
pub fn rollout_with_field(
    field: &HumanoidField,
    start: Vector2<f64>,
    model: &AgentModel,
    cfg: &RolloutConfig,
) -> Result<RolloutResult, SimError> {
    model.validate()?;
    cfg.validate()?;
    let goal = field.goal.xy();
    let ext = field.sdf.spec.extents();
    let limit = cfg.limit_for((goal - start).norm(), model.max_speed, ext.x.max(ext.y));
    let max_steps = cfg.steps(limit);
    let window = cfg.steps(cfg.stall_window).max(1);

    let mut state = AgentState::standing(start, goal);
    let mut trajectory: Vec<TraceStep> = Vec::new();
    let mut history: Vec<Vector2<f64>> = Vec::new();
    let mut de = f64::INFINITY;
    let mut min_clearance = f64::INFINITY;
    let mut i = 0usize;
    let termination = loop {
        let t = i as f64 * cfg.dt;
        let xy = state.xy();
        let dist = (xy - goal).norm();
        de = de.min(dist);
        history.push(xy);
        let c = clearance(&field.sdf_filled, &derive_parts(model, &state));
        min_clearance = min_clearance.min(c);
        if c < 0.0 {
            break Termination::Collision;
        }
        if dist <= cfg.success_radius {
            break Termination::Reached;
        }
        if i >= max_steps {
            break Termination::Timeout;
        }
        if i >= window && (xy - history[i - window]).norm() < cfg.stall_distance {
            break Termination::Stalled;
        }
        let queries = weighted_queries(field, model, &state, cfg.weighting)?;
        let next = step_with_queries(model, &state, &queries, cfg.dt, cfg.reverse_field)?;
        let priors: Vec<VmfPrior> = queries.iter().map(derive_prior).collect();
        let r = step_reward(model, &priors, &next)?;
        trajectory.push(TraceStep { t, state, queries, r_field: r });
        state = next;
        i += 1;
    };
    let time_used = i as f64 * cfg.dt;
    Ok(RolloutResult {
        success: termination == Termination::Reached,
        collided: termination == Termination::Collision,
        time_used,
        de,
        termination,
        trajectory,
        final_state: state,
        min_clearance,
        time_limit: limit,
    })
}

/// Build the field toward `goal` on `grid` and roll out from `start`.
pub fn rollout_on_grid(
    grid: &OccupancyGrid,
    start: &nalgebra::Vector3<f64>,
    goal: &nalgebra::Vector3<f64>,
    model: &AgentModel,
    params: &FieldParams,
    cfg: &RolloutConfig,
) -> Result<RolloutResult, SimError> {
    let field = build_field_with(grid, goal, params, cfg.goal_region)?;
    rollout_with_field(&field, start.xy(), model, cfg)
}

/// Rebuild the scene, build its field once, and roll out from its start.
pub fn run_rollout(
    scene: &SceneManifest,
    model: &AgentModel,
    params: &FieldParams,
    cfg: &RolloutConfig,
) -> Result<RolloutResult, SimError> {
    scene.validate()?;
    let grid = scene.build_grid(DEFAULT_VOXEL_BUDGET)?;
    rollout_on_grid(&grid, &scene.start(), &scene.goal(), model, params, cfg)
}
