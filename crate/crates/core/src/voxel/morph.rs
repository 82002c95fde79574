//! Binary morphology with a discrete Euclidean ball.
//!
//! Dilation and erosion form an adjunction on subsets of the grid domain:
//! dilation is clipped to the grid, and erosion treats voxels beyond the
//! border as "don't care" (foreground). With that convention closing is
//! extensive, opening anti-extensive, both idempotent, and
//! `erode(A) = complement(dilate(complement(A)))` holds exactly.
//!
//! Both passes go through the exact distance transform, so the ball
//! `{o : |o|^2 <= r^2}` is applied without enumerating offsets.

use super::edt::squared_edt;
use super::grid::OccupancyGrid;

pub fn dilate(grid: &OccupancyGrid, radius_vox: u32) -> OccupancyGrid {
    if radius_vox == 0 {
        return grid.clone();
    }
    let r2 = (radius_vox as i64).pow(2);
    let dist = squared_edt(&grid.occupied, grid.spec.dims);
    OccupancyGrid { spec: grid.spec, occupied: dist.iter().map(|&d| d <= r2).collect() }
}

pub fn erode(grid: &OccupancyGrid, radius_vox: u32) -> OccupancyGrid {
    if radius_vox == 0 {
        return grid.clone();
    }
    dilate(&grid.complement(), radius_vox).complement()
}

/// Dilate then erode: seals cracks narrower than the ball.
pub fn morph_close(grid: &OccupancyGrid, radius_vox: u32) -> OccupancyGrid {
    erode(&dilate(grid, radius_vox), radius_vox)
}

/// Erode then dilate: shaves protrusions thinner than the ball.
pub fn morph_open(grid: &OccupancyGrid, radius_vox: u32) -> OccupancyGrid {
    dilate(&erode(grid, radius_vox), radius_vox)
}

/// Erosion of `mask` in which cells beyond the border count as blocked:
/// a cell survives iff every cell within `radius_vox` (Euclidean, voxel
/// units, possibly fractional) is inside the grid and set in `mask`.
pub fn erode_bounded(mask: &[bool], dims: [usize; 3], radius_vox: f64) -> Vec<bool> {
    let r2 = radius_vox * radius_vox;
    let blocked: Vec<bool> = mask.iter().map(|m| !m).collect();
    let dist = squared_edt(&blocked, dims);
    let nx = dims[0];
    let ny = dims[1];
    (0..mask.len())
        .map(|idx| {
            if !mask[idx] {
                return false;
            }
            if (dist[idx] as f64) <= r2 {
                return false;
            }
            let c = [idx % nx, (idx / nx) % ny, idx / (nx * ny)];
            (0..3).all(|a| {
                if dims[a] == 1 {
                    // a flat axis has no border along it
                    return true;
                }
                // nearest outside cell along this axis
                let edge = (c[a] + 1).min(dims[a] - c[a]) as f64;
                edge * edge > r2
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::grid::GridSpec;
    use nalgebra::Vector3;

    fn grid(n: usize) -> OccupancyGrid {
        OccupancyGrid::empty(GridSpec::new(Vector3::zeros(), 1.0, [n, n, n]).unwrap())
    }

    #[test]
    fn zero_radius_is_identity() {
        let mut g = grid(5);
        g.set([1, 2, 3], true);
        g.set([4, 4, 4], true);
        assert_eq!(morph_close(&g, 0), g);
        assert_eq!(morph_open(&g, 0), g);
    }

    #[test]
    fn isolated_voxel_opens_away() {
        let mut g = grid(5);
        g.set([2, 2, 2], true);
        assert_eq!(morph_open(&g, 1).count_occupied(), 0);
    }

    #[test]
    fn dilation_of_point_is_ball() {
        let mut g = grid(7);
        g.set([3, 3, 3], true);
        // radius 1 ball: centre + 6 face neighbours
        assert_eq!(dilate(&g, 1).count_occupied(), 7);
        // radius 2: all offsets with |o|^2 <= 4 -> 33 lattice points
        assert_eq!(dilate(&g, 2).count_occupied(), 33);
    }

    #[test]
    fn bounded_erosion_eats_border_band() {
        let dims = [6, 6, 1];
        let mask = vec![true; 36];
        let out = erode_bounded(&mask, dims, 2.0);
        // cells at index 2..=3 survive (edge distance 3 > 2)
        let kept: Vec<usize> = (0..36).filter(|&i| out[i]).collect();
        assert_eq!(kept.len(), 4);
        assert_eq!(erode_bounded(&mask, dims, 0.0), mask);
    }
}
