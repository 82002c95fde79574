//! Click-and-traverse session state: a single-writer core that owns the
//! agent, the active field and the goal, advances in fixed ticks, and logs
//! every command so a session can be replayed headlessly.

use std::sync::Arc;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::field::{build_field_with, FieldError, FieldParams, FieldQuery, GoalRegion, HumanoidField};
use crate::scene::walkable::project_walkable;
use crate::scene::{certify_traversable, erode_walkable, SceneError, SceneManifest, WalkableMask};
use crate::sim::{check_collision, derive_parts, step_with_queries, weighted_queries, AgentState, SimError};
use crate::voxel::OccupancyGrid;

pub const PROTO: u32 = 1;
/// Seconds per broadcast tick.
pub const TICK_SECONDS: f64 = 0.1;
/// Follower steps per tick.
pub const SUBSTEPS: usize = 5;
/// Largest distance a clicked goal may be moved to reach a walkable cell.
pub const GOAL_SNAP_RADIUS: f64 = 0.3;
/// Map cells per frame-map cell along each axis.
pub const MAP_DOWNSAMPLE: usize = 2;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("scene rejected: {0}")]
    Rejected(String),
    #[error("goal rejected: {0}")]
    GoalRejected(String),
    #[error("session frozen: {0}")]
    Frozen(String),
    #[error("bad command: {0}")]
    BadCommand(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Idle,
    Traversing,
    Reached,
    Collided,
}

/// A session input, stamped with the tick it preceded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Command {
    /// A goal accepted before tick `tick`, already snapped.
    Goal { tick: u64, goal: [f64; 3] },
    /// The field for `goal` became active at the start of tick `tick`.
    Swap { tick: u64, goal: [f64; 3] },
    /// Debug move of the agent root before tick `tick`.
    Teleport { tick: u64, x: f64, y: f64 },
}

/// A goal click as sent by a client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalCommand {
    #[serde(default, rename = "type", skip_serializing_if = "Option::is_none")]
    pub kind: Option<GoalTag>,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalTag {
    Goal,
}

/// Parse a goal command: `{"x": .., "y": ..}`, optionally tagged
/// `"type": "goal"`.
pub fn parse_goal_command(text: &str) -> Result<GoalCommand, SessionError> {
    let c: GoalCommand = serde_json::from_str(text).map_err(|e| SessionError::BadCommand(e.to_string()))?;
    if !(c.x.is_finite() && c.y.is_finite()) {
        return Err(SessionError::BadCommand("coordinates must be finite".into()));
    }
    Ok(c)
}

/// Top-down blocked mask, coarsened by [`MAP_DOWNSAMPLE`]. `blocked` holds
/// one `'0'`/`'1'` per cell, x fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSlice {
    pub origin: [f64; 2],
    pub cell: f64,
    pub dims: [usize; 2],
    pub blocked: String,
}

impl MapSlice {
    pub fn from_mask(mask: &WalkableMask, factor: usize) -> Self {
        let f = factor.max(1);
        let dims = [mask.dims[0].div_ceil(f), mask.dims[1].div_ceil(f)];
        let mut blocked = String::with_capacity(dims[0] * dims[1]);
        for cj in 0..dims[1] {
            for ci in 0..dims[0] {
                let any = (cj * f..((cj + 1) * f).min(mask.dims[1]))
                    .any(|j| (ci * f..((ci + 1) * f).min(mask.dims[0])).any(|i| !mask.free[mask.index(i, j)]));
                blocked.push(if any { '1' } else { '0' });
            }
        }
        Self { origin: mask.origin.into(), cell: mask.resolution * f as f64, dims, blocked }
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.blocked.as_bytes()[i + self.dims[0] * j] == b'1'
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFrame {
    pub xy: [f64; 2],
    pub height_scale: f64,
    pub lean: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartFrame {
    pub xy_z: [f64; 3],
    pub f_h: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub proto: u32,
    pub tick: u64,
    pub t: f64,
    pub agent: AgentFrame,
    pub parts: Vec<PartFrame>,
    pub goal: [f64; 3],
    pub pending_goal: Option<[f64; 3]>,
    pub status: Status,
    pub map: MapSlice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AckEvent {
    pub proto: u32,
    pub goal: [f64; 3],
    /// First tick that can reflect this goal.
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub proto: u32,
    pub tick: u64,
    pub message: String,
}

/// Everything a session sends to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Event {
    State(StateFrame),
    Ack(AckEvent),
    Error(ErrorEvent),
}

impl Event {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

/// What an off-thread rebuild needs.
#[derive(Debug, Clone)]
pub struct FieldJob {
    pub grid: Arc<OccupancyGrid>,
    pub params: FieldParams,
    pub region: GoalRegion,
}

impl FieldJob {
    pub fn build(&self, goal: &Vector3<f64>) -> Result<HumanoidField, FieldError> {
        build_field_with(&self.grid, goal, &self.params, self.region)
    }
}

#[derive(Debug, Clone)]
pub struct SessionCore {
    scene: SceneManifest,
    config: RunConfig,
    grid: Arc<OccupancyGrid>,
    walkable: WalkableMask,
    map: MapSlice,
    field: Arc<HumanoidField>,
    goal: Vector3<f64>,
    pending: Option<Vector3<f64>>,
    agent: AgentState,
    tick: u64,
    status: Status,
    frozen: Option<String>,
    log: Vec<Command>,
}

impl SessionCore {
    /// Idle session with the agent at the scene start and the field built
    /// toward the scene goal.
    pub fn new(scene: SceneManifest, config: RunConfig) -> Result<Self, SessionError> {
        scene.validate()?;
        config.validate().map_err(|e| SessionError::Rejected(e.to_string()))?;
        let grid = Arc::new(scene.build_grid(config.scene.voxel_budget)?);
        if !certify_traversable(&grid, &scene.start(), &scene.goal(), config.scene.agent_radius) {
            return Err(SessionError::Rejected("start and goal are not connected for the agent radius".into()));
        }
        let job = FieldJob { grid: grid.clone(), params: config.field, region: config.rollout.goal_region };
        let field = Arc::new(job.build(&scene.goal())?);
        let walkable = erode_walkable(&grid, config.scene.walkable_radius, config.scene.height_band);
        let map = MapSlice::from_mask(&project_walkable(&grid, config.scene.height_band), MAP_DOWNSAMPLE);
        let agent = AgentState::standing(scene.start().xy(), scene.goal().xy());
        Ok(Self {
            goal: scene.goal(),
            scene,
            config,
            grid,
            walkable,
            map,
            field,
            pending: None,
            agent,
            tick: 0,
            status: Status::Idle,
            frozen: None,
            log: Vec::new(),
        })
    }

    pub fn scene(&self) -> &SceneManifest {
        &self.scene
    }

    pub fn map(&self) -> &MapSlice {
        &self.map
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn goal(&self) -> Vector3<f64> {
        self.goal
    }

    pub fn pending_goal(&self) -> Option<Vector3<f64>> {
        self.pending
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn field(&self) -> &Arc<HumanoidField> {
        &self.field
    }

    pub fn log(&self) -> &[Command] {
        &self.log
    }

    pub fn frozen(&self) -> Option<&str> {
        self.frozen.as_deref()
    }

    pub fn field_job(&self) -> FieldJob {
        FieldJob { grid: self.grid.clone(), params: self.config.field, region: self.config.rollout.goal_region }
    }

    /// Nearest walkable cell centre within [`GOAL_SNAP_RADIUS`] of `(x, y)`,
    /// lifted to the scene's point height.
    pub fn snap_goal(&self, x: f64, y: f64) -> Result<Vector3<f64>, SessionError> {
        let room = self.scene.room;
        if !(x.is_finite() && y.is_finite() && (0.0..=room[0]).contains(&x) && (0.0..=room[1]).contains(&y)) {
            return Err(SessionError::GoalRejected(format!("({x}, {y}) lies outside the room")));
        }
        let m = &self.walkable;
        let p = Vector2::new(x, y);
        let reach = (GOAL_SNAP_RADIUS / m.resolution).ceil() as i64 + 1;
        let (ci, cj) = (((x - m.origin.x) / m.resolution).floor() as i64, ((y - m.origin.y) / m.resolution).floor() as i64);
        let mut best: Option<(f64, usize, usize)> = None;
        for j in (cj - reach).max(0)..=(cj + reach).min(m.dims[1] as i64 - 1) {
            for i in (ci - reach).max(0)..=(ci + reach).min(m.dims[0] as i64 - 1) {
                let (i, j) = (i as usize, j as usize);
                if !m.free[m.index(i, j)] {
                    continue;
                }
                let d = (m.center(i, j) - p).norm();
                if d <= GOAL_SNAP_RADIUS && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else {
            return Err(SessionError::GoalRejected(format!(
                "no walkable cell within {GOAL_SNAP_RADIUS} m of ({x}, {y})"
            )));
        };
        let c = m.center(i, j);
        let z = self.scene.start[2];
        let goal = Vector3::new(c.x, c.y, z);
        Ok(self.grid.spec.snap_to_center(&goal).unwrap_or(goal))
    }

    /// Accept a clicked goal. The caller builds the field for the returned
    /// goal (see [`Self::field_job`]) and hands it to a later [`Self::tick`].
    pub fn request_goal(&mut self, x: f64, y: f64) -> Result<AckEvent, SessionError> {
        if let Some(why) = &self.frozen {
            return Err(SessionError::Frozen(why.clone()));
        }
        if self.status == Status::Collided {
            return Err(SessionError::GoalRejected("agent is in collision".into()));
        }
        let goal = self.snap_goal(x, y)?;
        self.accept_goal(goal);
        Ok(AckEvent { proto: PROTO, goal: goal.into(), tick: self.tick })
    }

    fn accept_goal(&mut self, goal: Vector3<f64>) {
        self.log.push(Command::Goal { tick: self.tick, goal: goal.into() });
        self.pending = Some(goal);
        self.status = Status::Traversing;
    }

    /// Debug: move the agent root, zeroing its rates.
    pub fn teleport(&mut self, x: f64, y: f64) -> Result<(), SessionError> {
        let room = self.scene.room;
        if !(x.is_finite() && y.is_finite() && (0.0..=room[0]).contains(&x) && (0.0..=room[1]).contains(&y)) {
            return Err(SessionError::BadCommand(format!("({x}, {y}) lies outside the room")));
        }
        self.log.push(Command::Teleport { tick: self.tick, x, y });
        self.apply_teleport(x, y);
        Ok(())
    }

    fn apply_teleport(&mut self, x: f64, y: f64) {
        self.agent = AgentState { root_xy: [x, y], heading: self.agent.heading, ..AgentState::standing(Vector2::new(x, y), Vector2::new(x, y)) };
        self.status = if self.colliding() { Status::Collided } else { Status::Idle };
    }

    fn colliding(&self) -> bool {
        check_collision(&self.field.sdf_filled, &derive_parts(&self.config.agent, &self.agent))
    }

    fn hold(&mut self) {
        self.agent.root_vel = [0.0; 2];
        self.agent.heading_rate = 0.0;
        self.agent.crouch_rate = 0.0;
        self.agent.lean_rate = 0.0;
    }

    fn substeps(&mut self) -> Result<(), SessionError> {
        let (model, cfg) = (&self.config.agent, &self.config.rollout);
        for _ in 0..SUBSTEPS {
            let qs = weighted_queries(&self.field, model, &self.agent, cfg.weighting)?;
            self.agent = step_with_queries(model, &self.agent, &qs, cfg.dt, cfg.reverse_field)?;
            if self.colliding() {
                self.status = Status::Collided;
                self.hold();
                break;
            }
            if (self.agent.xy() - self.goal.xy()).norm() <= cfg.success_radius {
                self.status = Status::Reached;
                self.hold();
                break;
            }
        }
        Ok(())
    }

    /// Advance one tick. `rebuilt` is a freshly built field; it is swapped in
    /// only if it matches the pending goal. While a goal is pending the agent
    /// holds still.
    pub fn tick(&mut self, rebuilt: Option<Arc<HumanoidField>>) -> Event {
        if let (Some(f), Some(p)) = (rebuilt, self.pending) {
            if f.goal == p {
                self.log.push(Command::Swap { tick: self.tick, goal: p.into() });
                self.field = f;
                self.goal = p;
                self.pending = None;
            }
        }
        let mut error = None;
        if self.frozen.is_none() {
            if self.status == Status::Traversing && self.pending.is_none() {
                if let Err(e) = self.substeps() {
                    self.hold();
                    self.frozen = Some(e.to_string());
                    error = Some(e.to_string());
                }
            } else {
                self.hold();
            }
        }
        self.tick += 1;
        match error {
            Some(message) => Event::Error(ErrorEvent { proto: PROTO, tick: self.tick, message }),
            None => Event::State(self.frame()),
        }
    }

    fn queries(&self) -> Vec<FieldQuery> {
        weighted_queries(&self.field, &self.config.agent, &self.agent, self.config.rollout.weighting).unwrap_or_default()
    }

    /// Snapshot of the current state.
    pub fn frame(&self) -> StateFrame {
        let parts = derive_parts(&self.config.agent, &self.agent);
        let qs = self.queries();
        StateFrame {
            proto: PROTO,
            tick: self.tick,
            t: self.tick as f64 * TICK_SECONDS,
            agent: AgentFrame {
                xy: self.agent.root_xy,
                height_scale: self.agent.height_scale,
                lean: self.agent.lean,
                heading: self.agent.heading,
            },
            parts: parts
                .iter()
                .enumerate()
                .map(|(k, p)| PartFrame {
                    xy_z: p.position.into(),
                    f_h: qs.get(k).map_or([0.0; 3], |q| q.f_h.into()),
                })
                .collect(),
            goal: self.goal.into(),
            pending_goal: self.pending.map(Into::into),
            status: self.status,
            map: self.map.clone(),
        }
    }
}

/// Re-run a session from its scene, config and command log for `ticks`
/// ticks, building fields synchronously at the logged swap ticks. Returns the
/// agent state after every tick.
pub fn replay(
    scene: SceneManifest,
    config: RunConfig,
    log: &[Command],
    ticks: u64,
) -> Result<Vec<AgentState>, SessionError> {
    let mut core = SessionCore::new(scene, config)?;
    let job = core.field_job();
    let mut out = Vec::with_capacity(ticks as usize);
    for n in 0..ticks {
        let mut swap = None;
        for c in log {
            match *c {
                Command::Goal { tick, goal } if tick == n => core.accept_goal(Vector3::from(goal)),
                Command::Teleport { tick, x, y } if tick == n => {
                    core.log.push(c.clone());
                    core.apply_teleport(x, y);
                }
                Command::Swap { tick, goal } if tick == n => swap = Some(Arc::new(job.build(&Vector3::from(goal))?)),
                _ => {}
            }
        }
        core.tick(swap);
        out.push(core.agent);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_commands_parse() {
        assert_eq!(parse_goal_command(r#"{"x": 1.5, "y": 2}"#).unwrap().x, 1.5);
        assert!(parse_goal_command(r#"{"type": "goal", "x": 1, "y": 2}"#).is_ok());
        assert!(parse_goal_command(r#"{"type": "teleport", "x": 1, "y": 2}"#).is_err());
        assert!(parse_goal_command(r#"{"x": 1}"#).is_err());
        assert!(parse_goal_command(r#"{"x": 1, "y": 2, "z": 3}"#).is_err());
        assert!(parse_goal_command("[]").is_err());
    }

    #[test]
    fn map_downsampling_keeps_blocked_cells() {
        let mask = WalkableMask {
            origin: Vector2::zeros(),
            resolution: 0.05,
            dims: [5, 3],
            free: (0..15).map(|i| i != 7).collect(),
        };
        let m = MapSlice::from_mask(&mask, 2);
        assert_eq!(m.dims, [3, 2]);
        assert_eq!(m.blocked, "010000");
        assert!(m.is_blocked(1, 0));
        assert!((m.cell - 0.1).abs() < 1e-15);
    }
}
