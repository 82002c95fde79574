//! Oriented boxes and their rasterization onto occupancy grids.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::grid::{GridError, GridSpec, OccupancyGrid};

/// Default ceiling on the number of voxels a rasterization may touch.
pub const DEFAULT_VOXEL_BUDGET: usize = 64 * 1024 * 1024;

/// Tolerance on the point-in-box test, in metres.
const INSIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anchor {
    /// Grows upward out of the floor.
    Floor,
    /// Hangs down from the ceiling.
    Ceiling,
    /// Free-floating.
    Mid,
}

/// A box with arbitrary orientation. `rotation` maps box-frame coordinates
/// to world coordinates and is stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: [f64; 3],
    pub half_extents: [f64; 3],
    pub rotation: [[f64; 3]; 3],
    pub anchor: Anchor,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("box half extents must be positive and finite, got {0:?}")]
    BadExtents([f64; 3]),
    #[error("box rotation is not a proper rotation (orthonormality error {0:e})")]
    BadRotation(f64),
}

impl OrientedBox {
    pub fn axis_aligned(center: Vector3<f64>, half_extents: Vector3<f64>, anchor: Anchor) -> Self {
        Self::new(center, half_extents, Matrix3::identity(), anchor)
    }

    pub fn new(center: Vector3<f64>, half_extents: Vector3<f64>, rotation: Matrix3<f64>, anchor: Anchor) -> Self {
        Self {
            center: center.into(),
            half_extents: half_extents.into(),
            rotation: [0, 1, 2].map(|r| [rotation[(r, 0)], rotation[(r, 1)], rotation[(r, 2)]]),
            anchor,
        }
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        Vector3::from(self.half_extents)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.rotation[r][c])
    }

    pub fn validate(&self) -> Result<(), BoxError> {
        if self.half_extents.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(BoxError::BadExtents(self.half_extents));
        }
        let r = self.rotation();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        let det = (r.determinant() - 1.0).abs();
        let err = ortho.max(det);
        if !(err <= 1e-9) {
            return Err(BoxError::BadRotation(err));
        }
        Ok(())
    }

    /// World point expressed in the box frame.
    #[inline]
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().transpose() * (p - self.center())
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.to_local(p);
        (0..3).all(|a| l[a].abs() <= self.half_extents[a] + INSIDE_EPS)
    }

    /// Half-size of the world-axis-aligned bounding box.
    pub fn aabb_half(&self) -> Vector3<f64> {
        self.rotation().abs() * self.half_extents()
    }

    /// Euclidean distance from `p` to the solid box (0 inside).
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        let l = self.to_local(p);
        Vector3::from_fn(|a, _| (l[a].abs() - self.half_extents[a]).max(0.0)).norm()
    }
}

/// Inclusive index range of cells whose centres may fall inside the AABB
/// `[lo, hi]`; `None` when it misses the grid.
pub(crate) fn index_range(spec: &GridSpec, lo: Vector3<f64>, hi: Vector3<f64>) -> Option<[(usize, usize); 3]> {
    let mut out = [(0, 0); 3];
    for a in 0..3 {
        let t0 = ((lo[a] - spec.origin[a]) / spec.resolution - 0.5).ceil() - 1.0;
        let t1 = ((hi[a] - spec.origin[a]) / spec.resolution - 0.5).floor() + 1.0;
        let n = spec.dims[a] as f64;
        let a0 = t0.max(0.0);
        let a1 = t1.min(n - 1.0);
        if a1 < a0 {
            return None;
        }
        out[a] = (a0 as usize, a1 as usize);
    }
    Some(out)
}

/// Mark every voxel whose centre lies inside at least one box.
pub fn rasterize_boxes(spec: GridSpec, boxes: &[OrientedBox], voxel_budget: usize) -> Result<OccupancyGrid, GridError> {
    rasterize_with(spec, boxes, voxel_budget, 0.0, |b, _, p| b.contains(p))
}

/// Shared scan loop: for each box, visit candidate cell centres inside its
/// AABB inflated by `pad` and mark those accepted by `inside`.
pub(crate) fn rasterize_with(
    spec: GridSpec,
    boxes: &[OrientedBox],
    voxel_budget: usize,
    pad: f64,
    inside: impl Fn(&OrientedBox, usize, &Vector3<f64>) -> bool,
) -> Result<OccupancyGrid, GridError> {
    if spec.len() > voxel_budget {
        return Err(GridError::Capacity { voxels: spec.len(), budget: voxel_budget });
    }
    let mut grid = OccupancyGrid::empty(spec);
    for (bi, b) in boxes.iter().enumerate() {
        let half = b.aabb_half() + Vector3::repeat(pad);
        let Some(range) = index_range(&spec, b.center() - half, b.center() + half) else {
            continue;
        };
        for k in range[2].0..=range[2].1 {
            for j in range[1].0..=range[1].1 {
                for i in range[0].0..=range[0].1 {
                    let idx = spec.index([i, j, k]);
                    if grid.occupied[idx] {
                        continue;
                    }
                    if inside(b, bi, &spec.center([i, j, k])) {
                        grid.occupied[idx] = true;
                    }
                }
            }
        }
    }
    Ok(grid)
}
