//! Exact Euclidean distance transforms.
//!
//! Squared distances are computed in integer voxel units with the separable
//! lower-envelope algorithm of Felzenszwalb and Huttenlocher: one 1D pass per
//! axis, each taking the lower envelope of parabolas rooted at the previous
//! pass's values. Envelope breakpoints are kept as exact rationals, so the
//! result matches a brute-force nearest-cell scan bit for bit.

use super::grid::{OccupancyGrid, ScalarField, UNREACHABLE};

/// Squared distance assigned to voxels with no feature voxel in the grid.
pub const NO_FEATURE: i64 = i64::MAX;

/// Squared Euclidean distance (in voxel units) from every voxel to the
/// nearest voxel where `mask` is true. Voxels with no feature anywhere get
/// [`NO_FEATURE`].
pub fn squared_edt(mask: &[bool], dims: [usize; 3]) -> Vec<i64> {
    let len = dims[0] * dims[1] * dims[2];
    assert_eq!(mask.len(), len, "mask length must match dims");
    let mut dist: Vec<i64> = mask.iter().map(|&m| if m { 0 } else { NO_FEATURE }).collect();

    let strides = [1, dims[0], dims[0] * dims[1]];
    let mut line = Vec::new();
    let mut out = Vec::new();
    let mut scratch = Envelope::default();
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let stride = strides[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..dims[a] {
            for v in 0..dims[b] {
                let base = u * strides[a] + v * strides[b];
                line.clear();
                line.extend((0..n).map(|q| dist[base + q * stride]));
                transform_line(&line, &mut out, &mut scratch);
                for (q, &d) in out.iter().enumerate() {
                    dist[base + q * stride] = d;
                }
            }
        }
    }
    dist
}

#[derive(Default)]
struct Envelope {
    // parabola apex locations
    v: Vec<usize>,
    // left breakpoints as rationals num/den, den > 0; None = -inf
    z: Vec<Option<(i64, i64)>>,
}

/// 1D lower envelope: `out[q] = min_p f[p] + (q - p)^2` over finite `f[p]`.
fn transform_line(f: &[i64], out: &mut Vec<i64>, env: &mut Envelope) {
    let n = f.len();
    out.clear();
    env.v.clear();
    env.z.clear();

    for q in 0..n {
        if f[q] == NO_FEATURE {
            continue;
        }
        let hq = f[q] + (q * q) as i64;
        while let Some(&p) = env.v.last() {
            let hp = f[p] + (p * p) as i64;
            // intersection of parabolas rooted at p and q
            let num = hq - hp;
            let den = 2 * (q as i64 - p as i64);
            let z_last = *env.z.last().unwrap();
            let dominated = match z_last {
                None => false,
                // num/den <= zn/zd  <=>  num*zd <= zn*den  (both denominators positive)
                Some((zn, zd)) => (num as i128) * (zd as i128) <= (zn as i128) * (den as i128),
            };
            if dominated {
                env.v.pop();
                env.z.pop();
            } else {
                env.v.push(q);
                env.z.push(Some((num, den)));
                break;
            }
        }
        if env.v.is_empty() {
            env.v.push(q);
            env.z.push(None);
        }
    }

    if env.v.is_empty() {
        out.resize(n, NO_FEATURE);
        return;
    }

    let mut k = 0;
    for q in 0..n {
        // advance while the next breakpoint lies at or left of q
        while k + 1 < env.v.len() {
            let (zn, zd) = env.z[k + 1].unwrap();
            if zn <= q as i64 * zd {
                k += 1;
            } else {
                break;
            }
        }
        let p = env.v[k];
        let dq = q as i64 - p as i64;
        out.push(f[p] + dq * dq);
    }
}

/// Squared voxel distance from each voxel to the nearest occupied voxel.
pub fn squared_distance_to_occupied(grid: &OccupancyGrid) -> Vec<i64> {
    squared_edt(&grid.occupied, grid.spec.dims)
}

/// Signed distance between cell centres, in metres.
///
/// Free voxels hold `+distance` to the nearest occupied centre, occupied
/// voxels hold `-distance` to the nearest free centre. A grid with no
/// occupied voxel is all [`UNREACHABLE`]; a grid with no free voxel is all
/// `-inf`.
pub fn signed_distance(grid: &OccupancyGrid) -> ScalarField {
    let dims = grid.spec.dims;
    let res = grid.spec.resolution;
    let to_occupied = squared_edt(&grid.occupied, dims);
    let free: Vec<bool> = grid.occupied.iter().map(|o| !o).collect();
    let to_free = squared_edt(&free, dims);

    let values = grid
        .occupied
        .iter()
        .zip(to_occupied.iter().zip(&to_free))
        .map(|(&occ, (&d_occ, &d_free))| {
            if occ {
                if d_free == NO_FEATURE {
                    f64::NEG_INFINITY
                } else {
                    -(d_free as f64).sqrt() * res
                }
            } else if d_occ == NO_FEATURE {
                UNREACHABLE
            } else {
                (d_occ as f64).sqrt() * res
            }
        })
        .collect();
    ScalarField { spec: grid.spec, values }
}
