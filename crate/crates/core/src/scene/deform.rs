//! Noise-displaced box faces and morphological cleanup.

use serde::{Deserialize, Serialize};

use super::perlin::Perlin2;
use crate::voxel::raster::rasterize_with;
use crate::voxel::{morph_close, morph_open, GridError, GridSpec, OccupancyGrid, OrientedBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerlinConfig {
    /// Peak face displacement, metres.
    pub amplitude: f64,
    /// Base lattice spacing, metres.
    pub cell_size: f64,
    pub octaves: u32,
}

impl Default for PerlinConfig {
    fn default() -> Self {
        Self { amplitude: 0.05, cell_size: 0.4, octaves: 2 }
    }
}

const INSIDE_EPS: f64 = 1e-9;

/// Rasterize boxes whose six faces are each pushed in or out along their
/// normal by `amplitude * noise(u, v)`, where `(u, v)` are the in-face box
/// coordinates. Every face of every box gets its own noise table.
pub fn deform_and_rasterize(
    boxes: &[OrientedBox],
    perlin: &PerlinConfig,
    seed: u64,
    spec: GridSpec,
    voxel_budget: usize,
) -> Result<OccupancyGrid, GridError> {
    let amp = perlin.amplitude;
    if amp == 0.0 {
        return crate::voxel::rasterize_boxes(spec, boxes, voxel_budget);
    }
    let tables: Vec<Perlin2> = (0..boxes.len() * 6).map(|i| Perlin2::new(seed, i as u32)).collect();
    rasterize_with(spec, boxes, voxel_budget, amp.abs(), |b, bi, p| {
        let l = b.to_local(p);
        (0..3).all(|a| {
            let face = 2 * a + (l[a] < 0.0) as usize;
            let (u, v) = (l[(a + 1) % 3], l[(a + 2) % 3]);
            let disp = amp * tables[6 * bi + face].fbm(u, v, perlin.cell_size, perlin.octaves);
            l[a].abs() <= b.half_extents[a] + disp + INSIDE_EPS
        })
    })
}

/// Close (seal cracks) then open (shave spikes) with the same ball.
pub fn cleanup(grid: &OccupancyGrid, radius_vox: u32) -> OccupancyGrid {
    morph_open(&morph_close(grid, radius_vox), radius_vox)
}
