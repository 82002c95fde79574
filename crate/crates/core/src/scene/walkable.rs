//! Ground-plane walkability, start/goal sampling, and traversability
//! certification.

use nalgebra::{Vector2, Vector3};
use rand::Rng;

use super::SceneError;
use crate::field::multi_source_geodesic;
use crate::voxel::morph::erode_bounded;
use crate::voxel::OccupancyGrid;

/// Free/blocked flags over the ground cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkableMask {
    pub origin: Vector2<f64>,
    pub resolution: f64,
    pub dims: [usize; 2],
    pub free: Vec<bool>,
}

impl WalkableMask {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.dims[0] * j
    }

    pub fn center(&self, i: usize, j: usize) -> Vector2<f64> {
        self.origin + Vector2::new(i as f64 + 0.5, j as f64 + 0.5) * self.resolution
    }

    pub fn locate(&self, p: &Vector2<f64>) -> Option<(usize, usize)> {
        let t = (p - self.origin) / self.resolution;
        if t.x < 0.0 || t.y < 0.0 {
            return None;
        }
        let (i, j) = (t.x.floor() as usize, t.y.floor() as usize);
        (i < self.dims[0] && j < self.dims[1]).then_some((i, j))
    }

    pub fn is_free_at(&self, p: &Vector2<f64>) -> bool {
        self.locate(p).is_some_and(|(i, j)| self.free[self.index(i, j)])
    }

    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        (0..self.dims[1])
            .flat_map(|j| (0..self.dims[0]).map(move |i| (i, j)))
            .filter(|&(i, j)| self.free[self.index(i, j)])
            .collect()
    }
}

/// Ground cells with no occupied voxel whose centre height lies in `band`.
pub fn project_walkable(grid: &OccupancyGrid, band: [f64; 2]) -> WalkableMask {
    let spec = grid.spec;
    let [nx, ny, nz] = spec.dims;
    let ks: Vec<usize> = (0..nz)
        .filter(|&k| {
            let z = spec.center([0, 0, k]).z;
            z >= band[0] && z <= band[1]
        })
        .collect();
    let mut free = vec![true; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            free[i + nx * j] = !ks.iter().any(|&k| grid.get([i, j, k]));
        }
    }
    WalkableMask { origin: spec.origin.xy(), resolution: spec.resolution, dims: [nx, ny], free }
}

/// Project occupancy in the height band, then erode the free cells by a disc
/// of `radius` metres. Cells outside the room count as blocked.
pub fn erode_walkable(grid: &OccupancyGrid, radius: f64, band: [f64; 2]) -> WalkableMask {
    let mut mask = project_walkable(grid, band);
    let [nx, ny] = mask.dims;
    mask.free = erode_bounded(&mask.free, [nx, ny, 1], radius / mask.resolution);
    mask
}

pub const CIRCLE_SAMPLES: usize = 128;
pub const START_DRAWS: usize = 1024;

/// Draw a start uniformly over free cells and a goal on the circle of
/// `radius` around it, snapped to the centre of a free cell. Both points sit
/// at height `z`.
pub fn sample_start_goal(
    mask: &WalkableMask,
    rng: &mut impl Rng,
    radius: f64,
    z: f64,
) -> Result<(Vector3<f64>, Vector3<f64>), SceneError> {
    let free = mask.free_cells();
    if free.is_empty() {
        return Err(SceneError::Rejected("no walkable cell".into()));
    }
    let half_cell = 0.5 * mask.resolution;
    for _ in 0..START_DRAWS {
        let (si, sj) = free[rng.random_range(0..free.len())];
        let start = mask.center(si, sj);
        for _ in 0..CIRCLE_SAMPLES {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let p = start + Vector2::new(theta.cos(), theta.sin()) * radius;
            let Some((gi, gj)) = mask.locate(&p) else { continue };
            if !mask.free[mask.index(gi, gj)] {
                continue;
            }
            let goal = mask.center(gi, gj);
            if ((goal - start).norm() - radius).abs() > half_cell * std::f64::consts::SQRT_2 {
                continue;
            }
            return Ok((Vector3::new(start.x, start.y, z), Vector3::new(goal.x, goal.y, z)));
        }
    }
    Err(SceneError::Rejected(format!("no start/goal pair after {START_DRAWS} start draws")))
}

/// Free space shrunk by `agent_radius`: a voxel stays free only if every
/// voxel centre within the radius is free and inside the grid.
pub fn clearance_free_space(grid: &OccupancyGrid, agent_radius: f64) -> OccupancyGrid {
    let free: Vec<bool> = grid.occupied.iter().map(|o| !o).collect();
    let kept = erode_bounded(&free, grid.spec.dims, agent_radius / grid.spec.resolution);
    OccupancyGrid { spec: grid.spec, occupied: kept.iter().map(|f| !f).collect() }
}

/// Whether a body of radius `agent_radius` can move from `start` to `goal`
/// through free space.
pub fn certify_traversable(grid: &OccupancyGrid, start: &Vector3<f64>, goal: &Vector3<f64>, agent_radius: f64) -> bool {
    let eroded = clearance_free_space(grid, agent_radius);
    let (Some(s), Some(g)) = (grid.spec.locate(start), grid.spec.locate(goal)) else {
        return false;
    };
    if eroded.get(s) || eroded.get(g) {
        return false;
    }
    multi_source_geodesic(&eroded, &[g]).get(s).is_finite()
}
