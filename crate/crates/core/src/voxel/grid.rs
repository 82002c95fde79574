//! Metric voxel lattices.
//!
//! Every lattice in this crate stores one value per voxel in row-major order
//! with `x` varying fastest. Voxel `(i, j, k)` is centred at
//! `origin + (idx + 0.5) * resolution` on each axis.

use nalgebra::Vector3;
use thiserror::Error;

/// Marker for voxels whose scalar value is undefined (unreachable, or no
/// obstacle in range). Any non-finite value is treated as a sentinel;
/// `-inf` only shows up in signed distances of fully occupied grids.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Queries within this many index units of a cell centre snap onto it, so
/// cell-centre lookups survive decimal round-off in world coordinates.
const CENTER_SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("resolution must be positive and finite, got {0}")]
    BadResolution(f64),
    #[error("grid dimensions must all be >= 1, got {0:?}")]
    EmptyDims([usize; 3]),
    #[error("grid of {voxels} voxels exceeds the budget of {budget}")]
    Capacity { voxels: usize, budget: usize },
    #[error("point ({}, {}, {}) lies outside the sampling box", .0[0], .0[1], .0[2])]
    OutOfBounds([f64; 3]),
    #[error("payload length {got} does not match {expected} voxels")]
    LengthMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Vector3<f64>,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Vector3<f64>, resolution: f64, dims: [usize; 3]) -> Result<Self, GridError> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(GridError::BadResolution(resolution));
        }
        if dims.contains(&0) {
            return Err(GridError::EmptyDims(dims));
        }
        dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or(GridError::Capacity { voxels: usize::MAX, budget: usize::MAX })?;
        Ok(Self { origin, resolution, dims })
    }

    /// A grid whose cells tile the box `[origin, origin + extents]`, with the
    /// cell count per axis rounded to the nearest integer (at least one).
    pub fn covering(origin: Vector3<f64>, extents: Vector3<f64>, resolution: f64) -> Result<Self, GridError> {
        let dims = [0, 1, 2].map(|a| ((extents[a] / resolution).round() as usize).max(1));
        Self::new(origin, resolution, dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn center(&self, ijk: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            self.origin.x + (ijk[0] as f64 + 0.5) * self.resolution,
            self.origin.y + (ijk[1] as f64 + 0.5) * self.resolution,
            self.origin.z + (ijk[2] as f64 + 0.5) * self.resolution,
        )
    }

    /// Upper corner of the grid's bounding box.
    pub fn max_corner(&self) -> Vector3<f64> {
        self.origin + Vector3::from_fn(|a, _| self.dims[a] as f64 * self.resolution)
    }

    pub fn extents(&self) -> Vector3<f64> {
        Vector3::from_fn(|a, _| self.dims[a] as f64 * self.resolution)
    }

    /// Length of the bounding-box diagonal; bounds every in-grid distance.
    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    /// Cell containing `p`, or `None` when `p` is outside the grid.
    pub fn locate(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.resolution;
            // tolerate round-off on the exact upper/lower faces
            let t = if (t - t.round()).abs() < CENTER_SNAP { t.round() } else { t };
            if !(t >= 0.0) || t > self.dims[a] as f64 {
                return None;
            }
            out[a] = (t.floor() as usize).min(self.dims[a] - 1);
        }
        Some(out)
    }

    /// Continuous index coordinate of `p` (cell centres at integers), or an
    /// error when `p` lies outside the convex hull of cell centres.
    pub(crate) fn sample_coords(&self, p: &Vector3<f64>) -> Result<[f64; 3], GridError> {
        let mut out = [0.0; 3];
        for a in 0..3 {
            let mut t = (p[a] - self.origin[a]) / self.resolution - 0.5;
            if (t - t.round()).abs() < CENTER_SNAP {
                t = t.round();
            }
            let hi = (self.dims[a] - 1) as f64;
            if !(t >= 0.0 && t <= hi) {
                return Err(GridError::OutOfBounds([p.x, p.y, p.z]));
            }
            out[a] = t;
        }
        Ok(out)
    }

    /// Snap a world point onto the centre of the cell containing it.
    pub fn snap_to_center(&self, p: &Vector3<f64>) -> Option<Vector3<f64>> {
        self.locate(p).map(|ijk| self.center(ijk))
    }

    pub fn iter_coords(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.len()).map(move |idx| self.coords(idx))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    pub occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(spec: GridSpec) -> Self {
        Self { occupied: vec![false; spec.len()], spec }
    }

    pub fn from_vec(spec: GridSpec, occupied: Vec<bool>) -> Result<Self, GridError> {
        if occupied.len() != spec.len() {
            return Err(GridError::LengthMismatch { got: occupied.len(), expected: spec.len() });
        }
        Ok(Self { spec, occupied })
    }

    #[inline]
    pub fn get(&self, ijk: [usize; 3]) -> bool {
        self.occupied[self.spec.index(ijk)]
    }

    #[inline]
    pub fn set(&mut self, ijk: [usize; 3], value: bool) {
        let idx = self.spec.index(ijk);
        self.occupied[idx] = value;
    }

    pub fn count_occupied(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.count_occupied() as f64 / self.spec.len() as f64
    }

    /// Whether the point lies in an occupied voxel. Points outside the grid
    /// count as free.
    pub fn is_occupied_at(&self, p: &Vector3<f64>) -> bool {
        self.spec.locate(p).map(|ijk| self.get(ijk)).unwrap_or(false)
    }

    pub fn complement(&self) -> Self {
        Self { spec: self.spec, occupied: self.occupied.iter().map(|o| !o).collect() }
    }

    pub fn is_subset_of(&self, other: &OccupancyGrid) -> bool {
        self.occupied.iter().zip(&other.occupied).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::LengthMismatch { got: values.len(), expected: spec.len() });
        }
        Ok(Self { spec, values })
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self { values: vec![value; spec.len()], spec }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Vector3<f64>) -> f64) -> Self {
        let values = spec.iter_coords().map(|ijk| f(spec.center(ijk))).collect();
        Self { spec, values }
    }

    #[inline]
    pub fn get(&self, ijk: [usize; 3]) -> f64 {
        self.values[self.spec.index(ijk)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn is_sentinel(v: f64) -> bool {
        !v.is_finite()
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::max)
    }

    pub fn min_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::min)
    }

    /// Replace sentinels with finite values so the field can be interpolated
    /// and differentiated.
    ///
    /// `+inf` becomes `max_finite + 10 * resolution * slope`; `-inf` becomes
    /// `min_finite - 10 * resolution * slope`. A field with no finite values
    /// at all is filled with `±(diagonal + 10 * resolution * slope)`, an upper
    /// bound on any in-grid distance.
    pub fn sentinel_filled(&self, slope: f64) -> Self {
        let margin = 10.0 * self.spec.resolution * slope;
        let far = self.spec.diagonal() + margin;
        let hi = self.max_finite().map(|m| m + margin).unwrap_or(far);
        let lo = self.min_finite().map(|m| m - margin).unwrap_or(-far);
        self.map(|v| {
            if v.is_finite() {
                v
            } else if v > 0.0 {
                hi
            } else if v < 0.0 {
                lo
            } else {
                // NaN never appears in constructed fields; treat it as unreachable
                hi
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub spec: GridSpec,
    pub values: Vec<Vector3<f64>>,
}

impl VectorField {
    pub fn new(spec: GridSpec, values: Vec<Vector3<f64>>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::LengthMismatch { got: values.len(), expected: spec.len() });
        }
        Ok(Self { spec, values })
    }

    #[inline]
    pub fn get(&self, ijk: [usize; 3]) -> Vector3<f64> {
        self.values[self.spec.index(ijk)]
    }

    pub fn map(&self, f: impl Fn(Vector3<f64>) -> Vector3<f64>) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}
