//! Obstacle-avoiding distance to the goal over the free-voxel graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Vector3;

use super::FieldError;
use crate::voxel::{OccupancyGrid, ScalarField, UNREACHABLE};

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on distance, ties broken by the lower voxel index
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The 26 neighbour offsets with their metric step lengths.
pub(crate) fn neighbour_steps(resolution: f64) -> Vec<([isize; 3], f64)> {
    let w = [0.0, resolution, resolution * std::f64::consts::SQRT_2, resolution * 3f64.sqrt()];
    let mut out = Vec::with_capacity(26);
    for dz in -1isize..=1 {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let nonzero = (dx != 0) as usize + (dy != 0) as usize + (dz != 0) as usize;
                if nonzero > 0 {
                    out.push(([dx, dy, dz], w[nonzero]));
                }
            }
        }
    }
    out
}

/// Locate the free voxel holding `goal`, or explain why it is unusable.
pub fn goal_voxel(grid: &OccupancyGrid, goal: &Vector3<f64>) -> Result<[usize; 3], FieldError> {
    let ijk = grid
        .spec
        .locate(goal)
        .ok_or_else(|| FieldError::InvalidGoal { goal: (*goal).into(), reason: "outside the grid".into() })?;
    if grid.get(ijk) {
        return Err(FieldError::InvalidGoal { goal: (*goal).into(), reason: "inside an obstacle".into() });
    }
    Ok(ijk)
}

/// Shortest-path distance from every free voxel to the goal voxel, moving
/// between 26-connected free voxels. Occupied and unreachable voxels hold
/// [`UNREACHABLE`].
pub fn geodesic_field(grid: &OccupancyGrid, goal: &Vector3<f64>) -> Result<ScalarField, FieldError> {
    let source = goal_voxel(grid, goal)?;
    Ok(multi_source_geodesic(grid, &[source]))
}

/// Dijkstra from several zero-distance sources over free voxels.
pub fn multi_source_geodesic(grid: &OccupancyGrid, sources: &[[usize; 3]]) -> ScalarField {
    let spec = grid.spec;
    let [nx, ny, nz] = spec.dims;
    let steps = neighbour_steps(spec.resolution);
    let mut dist = vec![UNREACHABLE; spec.len()];
    let mut done = vec![false; spec.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let idx = spec.index(s);
        if !grid.occupied[idx] {
            dist[idx] = 0.0;
            heap.push(Entry { dist: 0.0, idx });
        }
    }
    while let Some(Entry { dist: d, idx }) = heap.pop() {
        if done[idx] {
            continue;
        }
        done[idx] = true;
        let [i, j, k] = spec.coords(idx);
        for &([dx, dy, dz], w) in &steps {
            let (ni, nj, nk) = (i as isize + dx, j as isize + dy, k as isize + dz);
            if ni < 0 || nj < 0 || nk < 0 || ni >= nx as isize || nj >= ny as isize || nk >= nz as isize {
                continue;
            }
            let nidx = spec.index([ni as usize, nj as usize, nk as usize]);
            if grid.occupied[nidx] || done[nidx] {
                continue;
            }
            let nd = d + w;
            if nd < dist[nidx] {
                dist[nidx] = nd;
                heap.push(Entry { dist: nd, idx: nidx });
            }
        }
    }
    ScalarField { spec, values: dist }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::GridSpec;

    #[test]
    fn corridor_axis_distance() {
        let spec = GridSpec::new(Vector3::zeros(), 0.05, [20, 3, 3]).unwrap();
        let grid = OccupancyGrid::empty(spec);
        let goal = spec.center([0, 1, 1]);
        let g = geodesic_field(&grid, &goal).unwrap();
        assert_eq!(g.get([0, 1, 1]), 0.0);
        assert!((g.get([10, 1, 1]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diagonal_steps() {
        let spec = GridSpec::new(Vector3::zeros(), 1.0, [3, 3, 3]).unwrap();
        let g = geodesic_field(&OccupancyGrid::empty(spec), &spec.center([0, 0, 0])).unwrap();
        assert_eq!(g.get([1, 1, 0]), std::f64::consts::SQRT_2);
        assert_eq!(g.get([1, 1, 1]), 3f64.sqrt());
        assert_eq!(g.get([2, 2, 2]), 2.0 * 3f64.sqrt());
    }

    #[test]
    fn invalid_goals() {
        let spec = GridSpec::new(Vector3::zeros(), 1.0, [3, 3, 3]).unwrap();
        let mut grid = OccupancyGrid::empty(spec);
        grid.set([1, 1, 1], true);
        assert!(matches!(geodesic_field(&grid, &Vector3::new(9.0, 0.5, 0.5)), Err(FieldError::InvalidGoal { .. })));
        assert!(matches!(geodesic_field(&grid, &spec.center([1, 1, 1])), Err(FieldError::InvalidGoal { .. })));
    }

    #[test]
    fn sealed_pocket_is_unreachable() {
        let spec = GridSpec::new(Vector3::zeros(), 1.0, [7, 1, 1]).unwrap();
        let mut grid = OccupancyGrid::empty(spec);
        grid.set([3, 0, 0], true);
        let g = geodesic_field(&grid, &spec.center([0, 0, 0])).unwrap();
        assert_eq!(g.get([2, 0, 0]), 2.0);
        assert_eq!(g.get([3, 0, 0]), UNREACHABLE);
        assert_eq!(g.get([6, 0, 0]), UNREACHABLE);
    }
}
