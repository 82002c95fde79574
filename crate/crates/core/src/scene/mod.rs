//! Scene generation: procedural obstacles, noise deformation, cleanup,
//! walkable-region sampling, and traversability certification.

pub mod boxes;
pub mod deform;
pub mod perlin;
pub mod rng;
pub mod walkable;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boxes::{generate_boxes, generate_boxes_attempt, BoxSchedule};
pub use deform::{cleanup, deform_and_rasterize, PerlinConfig};
pub use perlin::{perlin2, Perlin2};
pub use walkable::{certify_traversable, erode_walkable, sample_start_goal, WalkableMask};

use crate::voxel::{BoxError, GridError, GridSpec, OccupancyGrid, OrientedBox, DEFAULT_VOXEL_BUDGET};

pub const SCENE_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene rejected: {0}")]
    Rejected(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("malformed manifest: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub scene_schema: u32,
    pub seed: u64,
    pub difficulty: f64,
    /// Room size in metres; the room spans `[0, room]` on each axis.
    pub room: [f64; 3],
    pub resolution: f64,
    pub boxes: Vec<OrientedBox>,
    pub perlin: PerlinConfig,
    pub morph_radius_vox: u32,
    /// Surround the room with one-voxel walls on its four sides.
    #[serde(default = "yes")]
    pub enclosed: bool,
    pub start: [f64; 3],
    pub goal: [f64; 3],
}

fn yes() -> bool {
    true
}

/// Mark the outermost voxel layers along x and y as occupied.
pub fn add_side_walls(grid: &mut OccupancyGrid) {
    let [nx, ny, _] = grid.spec.dims;
    for c in grid.spec.iter_coords().collect::<Vec<_>>() {
        if c[0] == 0 || c[1] == 0 || c[0] == nx - 1 || c[1] == ny - 1 {
            grid.set(c, true);
        }
    }
}

impl SceneManifest {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Invalid(m));
        if self.scene_schema != SCENE_SCHEMA {
            return bad(format!("unsupported scene_schema {}", self.scene_schema));
        }
        if !(0.0..=1.0).contains(&self.difficulty) {
            return bad(format!("difficulty {} outside [0, 1]", self.difficulty));
        }
        if self.room.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad(format!("room extents must be positive, got {:?}", self.room));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        let p = &self.perlin;
        if !(p.amplitude.is_finite() && p.amplitude >= 0.0 && p.cell_size.is_finite() && p.cell_size > 0.0 && p.octaves >= 1) {
            return bad(format!("bad noise settings {p:?}"));
        }
        for (name, pt) in [("start", self.start), ("goal", self.goal)] {
            if (0..3).any(|a| !(pt[a].is_finite() && pt[a] >= 0.0 && pt[a] <= self.room[a])) {
                return bad(format!("{name} {pt:?} lies outside the room"));
            }
        }
        for b in &self.boxes {
            if b.center.iter().any(|c| !c.is_finite()) {
                return bad("box centre is not finite".into());
            }
            b.validate()?;
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, GridError> {
        GridSpec::covering(Vector3::zeros(), Vector3::from(self.room), self.resolution)
    }

    pub fn start(&self) -> Vector3<f64> {
        Vector3::from(self.start)
    }

    pub fn goal(&self) -> Vector3<f64> {
        Vector3::from(self.goal)
    }

    /// Pretty JSON with a trailing newline; byte-stable for equal manifests.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    /// Rebuild the cleaned occupancy grid this manifest describes.
    pub fn build_grid(&self, voxel_budget: usize) -> Result<OccupancyGrid, SceneError> {
        let spec = self.grid_spec()?;
        let raw = deform_and_rasterize(&self.boxes, &self.perlin, self.seed, spec, voxel_budget)?;
        let mut grid = cleanup(&raw, self.morph_radius_vox);
        if self.enclosed {
            add_side_walls(&mut grid);
        }
        Ok(grid)
    }
}

/// Everything that shapes generated scenes besides the seed and difficulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub room: [f64; 3],
    pub resolution: f64,
    pub schedule: BoxSchedule,
    pub perlin: PerlinConfig,
    pub morph_radius_vox: u32,
    pub enclosed: bool,
    /// Disc radius for walkable-region erosion, metres.
    pub walkable_radius: f64,
    /// Heights whose occupancy blocks a ground cell, metres.
    pub height_band: [f64; 2],
    /// Radius of the clearance ball used for certification, metres.
    pub agent_radius: f64,
    /// Start-goal distance, metres.
    pub goal_distance: f64,
    /// Height of start and goal points (snapped to a voxel centre), metres.
    pub point_height: f64,
    /// Generation attempts per seed before the scene is rejected.
    pub max_attempts: u32,
    pub voxel_budget: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            room: [5.0, 5.0, 2.0],
            resolution: 0.05,
            schedule: BoxSchedule::default(),
            perlin: PerlinConfig::default(),
            morph_radius_vox: 1,
            enclosed: true,
            walkable_radius: 0.1,
            height_band: [0.0, 1.9],
            agent_radius: 0.2,
            goal_distance: 2.0,
            point_height: 0.6,
            max_attempts: 32,
            voxel_budget: DEFAULT_VOXEL_BUDGET,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError::Invalid(m.to_string()));
        if self.room.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("room extents must be positive");
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        if !(self.walkable_radius >= 0.0 && self.agent_radius >= 0.0 && self.goal_distance > 0.0) {
            return bad("radii must be >= 0 and goal_distance > 0");
        }
        if !(self.point_height > 0.0 && self.point_height < self.room[2]) {
            return bad("point_height must lie inside the room");
        }
        if self.schedule.n_max < self.schedule.n_min {
            return bad("n_max must be >= n_min");
        }
        if !(self.perlin.amplitude >= 0.0 && self.perlin.cell_size > 0.0 && self.perlin.octaves >= 1) {
            return bad("bad noise settings");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub manifest: SceneManifest,
    pub grid: OccupancyGrid,
    /// Attempt index that produced the scene.
    pub attempt: u32,
}

/// Snap a point to the centre of the voxel containing it.
fn snap(spec: &GridSpec, p: Vector3<f64>) -> Vector3<f64> {
    spec.snap_to_center(&p).unwrap_or(p)
}

/// Sample a certified start/goal pair on a built grid.
pub fn sample_certified_pair(
    grid: &OccupancyGrid,
    cfg: &SceneConfig,
    rng: &mut impl rand::Rng,
) -> Result<(Vector3<f64>, Vector3<f64>), SceneError> {
    let mask = erode_walkable(grid, cfg.walkable_radius, cfg.height_band);
    let z = snap(&grid.spec, Vector3::new(0.0, 0.0, cfg.point_height)).z;
    for _ in 0..8 {
        let (s, g) = sample_start_goal(&mask, rng, cfg.goal_distance, z)?;
        let (s, g) = (snap(&grid.spec, s), snap(&grid.spec, g));
        if certify_traversable(grid, &s, &g, cfg.agent_radius) {
            return Ok((s, g));
        }
    }
    Err(SceneError::Rejected("no certified start/goal pair".into()))
}

/// Build, clean, and certify scenes from `boxes` for one attempt.
fn finish_scene(
    seed: u64,
    difficulty: f64,
    boxes: Vec<OrientedBox>,
    cfg: &SceneConfig,
    attempt: u32,
) -> Result<GeneratedScene, SceneError> {
    let mut manifest = SceneManifest {
        scene_schema: SCENE_SCHEMA,
        seed,
        difficulty,
        room: cfg.room,
        resolution: cfg.resolution,
        boxes,
        perlin: cfg.perlin,
        morph_radius_vox: cfg.morph_radius_vox,
        enclosed: cfg.enclosed,
        start: [0.0; 3],
        goal: [0.0; 3],
    };
    let grid = manifest.build_grid(cfg.voxel_budget)?;
    let (s, g) = sample_certified_pair(&grid, cfg, &mut rng::stream(seed, rng::Purpose::StartGoal, attempt))?;
    manifest.start = s.into();
    manifest.goal = g.into();
    Ok(GeneratedScene { manifest, grid, attempt })
}

/// Procedural scene for `(seed, difficulty)`. Attempts are retried with
/// fresh obstacle streams until one certifies.
pub fn generate_scene(seed: u64, difficulty: f64, cfg: &SceneConfig) -> Result<GeneratedScene, SceneError> {
    if !(0.0..=1.0).contains(&difficulty) {
        return Err(SceneError::Invalid(format!("difficulty {difficulty} outside [0, 1]")));
    }
    cfg.validate()?;
    let mut last = None;
    for attempt in 0..cfg.max_attempts {
        let boxes = generate_boxes_attempt(seed, attempt, difficulty, cfg.room, &cfg.schedule);
        match finish_scene(seed, difficulty, boxes, cfg, attempt) {
            Ok(scene) => return Ok(scene),
            Err(SceneError::Rejected(why)) => last = Some(why),
            Err(e) => return Err(e),
        }
    }
    Err(SceneError::Rejected(format!(
        "seed {seed}: no traversable scene in {} attempts ({})",
        cfg.max_attempts,
        last.unwrap_or_default()
    )))
}

/// Cut a room-sized block with lower corner `crop_min` out of a larger box
/// layout and run it through the same cleanup and sampling pipeline. Boxes
/// whose bounding boxes miss the block are dropped; the rest are shifted
/// into block coordinates.
pub fn scene_from_layout(
    seed: u64,
    layout: &[OrientedBox],
    crop_min: [f64; 2],
    cfg: &SceneConfig,
) -> Result<GeneratedScene, SceneError> {
    cfg.validate()?;
    let shift = Vector3::new(crop_min[0], crop_min[1], 0.0);
    let room = Vector3::from(cfg.room);
    let mut boxes = Vec::new();
    for b in layout {
        b.validate()?;
        let lo = b.center() - b.aabb_half() - shift;
        let hi = b.center() + b.aabb_half() - shift;
        if (0..3).all(|a| hi[a] > 0.0 && lo[a] < room[a]) {
            let mut moved = b.clone();
            moved.center = (b.center() - shift).into();
            boxes.push(moved);
        }
    }
    let mut last = None;
    for attempt in 0..cfg.max_attempts {
        match finish_scene(seed, 0.0, boxes.clone(), cfg, attempt) {
            Ok(scene) => return Ok(scene),
            Err(SceneError::Rejected(why)) => last = Some(why),
            Err(e) => return Err(e),
        }
    }
    Err(SceneError::Rejected(last.unwrap_or_default()))
}
