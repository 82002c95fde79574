//! A room split by a wall centred on the start-goal line, mirror-symmetric
//! about the vertical plane through start and goal.

use nalgebra::Vector3;

use crate::scene::{PerlinConfig, SceneManifest, SCENE_SCHEMA};
use crate::voxel::{Anchor, OrientedBox};

/// `y` of the symmetry plane; a row of voxel centres.
pub const DILEMMA_AXIS_Y: f64 = 2.525;
const START_X: f64 = 1.525;
const GOAL_X: f64 = 3.475;
const POINT_Z: f64 = 0.625;

/// The symmetric wall scene. 101 voxel rows put the start-goal line exactly
/// on the middle row, so the grid mirrors onto itself.
pub fn dilemma_scenario() -> SceneManifest {
    let wall = OrientedBox::axis_aligned(
        Vector3::new(2.5, DILEMMA_AXIS_Y, 1.0),
        Vector3::new(0.1, 0.61, 1.1),
        Anchor::Floor,
    );
    SceneManifest {
        scene_schema: SCENE_SCHEMA,
        seed: 0,
        difficulty: 0.0,
        room: [5.0, 5.05, 2.0],
        resolution: 0.05,
        boxes: vec![wall],
        perlin: PerlinConfig { amplitude: 0.0, ..PerlinConfig::default() },
        morph_radius_vox: 1,
        enclosed: true,
        start: [START_X, DILEMMA_AXIS_Y, POINT_Z],
        goal: [GOAL_X, DILEMMA_AXIS_Y, POINT_Z],
    }
}

/// The dilemma start shifted sideways by `offset` metres.
pub fn dilemma_start(offset: f64) -> Vector3<f64> {
    Vector3::new(START_X, DILEMMA_AXIS_Y + offset, POINT_Z)
}
