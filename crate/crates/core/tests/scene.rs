use std::collections::VecDeque;

use fieldnav_core::scene::*;
use fieldnav_core::voxel::{rasterize_boxes, Anchor, GridSpec, OccupancyGrid, OrientedBox, DEFAULT_VOXEL_BUDGET};
use nalgebra::{Rotation3, Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn manifest(boxes: Vec<OrientedBox>, enclosed: bool) -> SceneManifest {
    SceneManifest {
        scene_schema: SCENE_SCHEMA,
        seed: 1,
        difficulty: 0.0,
        room: [5.0, 5.0, 2.0],
        resolution: 0.05,
        boxes,
        perlin: PerlinConfig { amplitude: 0.0, ..PerlinConfig::default() },
        morph_radius_vox: 1,
        enclosed,
        start: [0.525, 0.525, 0.625],
        goal: [4.525, 4.525, 0.625],
    }
}

/// Brute-force disc erosion of the projected mask; outside counts as blocked.
fn oracle_erosion(grid: &OccupancyGrid, radius: f64, band: [f64; 2]) -> Vec<bool> {
    let [nx, ny, nz] = grid.spec.dims;
    let blocked = |i: i64, j: i64| -> bool {
        if i < 0 || j < 0 || i >= nx as i64 || j >= ny as i64 {
            return true;
        }
        (0..nz).any(|k| {
            let z = grid.spec.center([0, 0, k]).z;
            z >= band[0] && z <= band[1] && grid.get([i as usize, j as usize, k])
        })
    };
    let r = radius / grid.spec.resolution;
    let reach = r.ceil() as i64;
    let mut out = vec![false; nx * ny];
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let mut free = true;
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    if ((di * di + dj * dj) as f64) <= r * r && blocked(i + di, j + dj) {
                        free = false;
                    }
                }
            }
            out[(i + nx as i64 * j) as usize] = free;
        }
    }
    out
}

#[test]
fn floor_box_inflates_by_the_walkable_radius() {
    let b = OrientedBox::axis_aligned(Vector3::new(2.5, 2.5, 0.5), Vector3::new(0.5, 0.5, 0.5), Anchor::Floor);
    let grid = manifest(vec![b], false).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
    let mask = erode_walkable(&grid, 0.1, [0.0, 1.9]);
    assert_eq!(mask.free, oracle_erosion(&grid, 0.1, [0.0, 1.9]));
    // the blocked footprint on the centre row spans 1.2 m
    let row = 50;
    let blocked: Vec<usize> = (0..100).filter(|&i| !mask.free[mask.index(i, row)] && (10..90).contains(&i)).collect();
    assert_eq!(blocked.len(), 24);
    assert!((mask.center(blocked[0], row).x - 1.925).abs() < 1e-9);
    assert!((mask.center(*blocked.last().unwrap(), row).x - 3.075).abs() < 1e-9);
    // a head-height beam above the band blocks nothing
    let beam = OrientedBox::axis_aligned(Vector3::new(2.5, 2.5, 1.95), Vector3::new(0.5, 0.5, 0.05), Anchor::Ceiling);
    let grid = manifest(vec![beam], false).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
    let mask = erode_walkable(&grid, 0.1, [0.0, 1.9]);
    assert!(mask.free[mask.index(50, 50)]);
}

#[test]
fn enclosure_blocks_the_border_only() {
    let grid = manifest(vec![], true).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
    let [nx, ny, nz] = grid.spec.dims;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let border = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                assert_eq!(grid.get([i, j, k]), border);
            }
        }
    }
}

#[test]
fn cleanup_removes_spikes_and_seals_cracks() {
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [12, 12, 12]).unwrap();
    let mut g = OccupancyGrid::empty(spec);
    // slab z in 2..=6 with a one-voxel crack at i = 6
    for i in 0..12 {
        for j in 0..12 {
            for k in 2..=6 {
                if i != 6 {
                    g.set([i, j, k], true);
                }
            }
        }
    }
    // a one-voxel-thick spike standing on top
    for k in 7..=10 {
        g.set([3, 5, k], true);
    }
    let c = cleanup(&g, 1);
    for k in 9..=10 {
        assert!(!c.get([3, 5, k]), "spike left at {k}");
    }
    // only a small fillet survives at its foot
    let fillet = |i: usize, j: usize, k: usize| match k {
        7 => i.abs_diff(3) + j.abs_diff(5) <= 1,
        8 => (i, j) == (3, 5),
        _ => k <= 6,
    };
    assert!(c.spec.iter_coords().all(|[i, j, k]| !c.get([i, j, k]) || fillet(i, j, k)));
    for j in 2..10 {
        for k in 3..=5 {
            assert!(c.get([6, j, k]), "crack at {j},{k}");
        }
    }
    // the slab interior is untouched
    assert!(c.get([2, 5, 4]) && c.get([9, 5, 4]));
}

#[test]
fn face_displacement_is_bounded() {
    let amp = 0.05;
    let r = Rotation3::from_euler_angles(0.3, -0.2, 0.7).into_inner();
    let b = OrientedBox::new(Vector3::new(1.0, 1.0, 0.8), Vector3::new(0.4, 0.3, 0.35), r, Anchor::Mid);
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [40, 40, 32]).unwrap();
    let perlin = PerlinConfig { amplitude: amp, ..PerlinConfig::default() };
    let g = deform_and_rasterize(std::slice::from_ref(&b), &perlin, 9, spec, DEFAULT_VOXEL_BUDGET).unwrap();
    let plain = rasterize_boxes(spec, std::slice::from_ref(&b), DEFAULT_VOXEL_BUDGET).unwrap();
    assert_ne!(g, plain);
    for c in spec.iter_coords() {
        let p = spec.center(c);
        let l = b.to_local(&p);
        let h = b.half_extents();
        if g.get(c) {
            assert!((0..3).all(|a| l[a].abs() <= h[a] + amp + 1e-9));
        }
        if (0..3).all(|a| l[a].abs() < h[a] - amp) {
            assert!(g.get(c));
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = SceneConfig::default();
    for seed in [0, 7, 123] {
        let a = generate_scene(seed, 0.5, &cfg).unwrap();
        let b = generate_scene(seed, 0.5, &cfg).unwrap();
        assert_eq!(a.manifest.to_json(), b.manifest.to_json());
        assert_eq!(a.grid, b.grid);
        // the manifest alone rebuilds the grid
        let back = SceneManifest::from_json(&a.manifest.to_json()).unwrap();
        assert_eq!(back.build_grid(DEFAULT_VOXEL_BUDGET).unwrap(), a.grid);
    }
    let a = generate_scene(1, 0.5, &cfg).unwrap().manifest;
    let b = generate_scene(2, 0.5, &cfg).unwrap().manifest;
    assert_ne!(a.to_json(), b.to_json());
    assert!(generate_scene(1, 1.5, &cfg).is_err());
}

/// Independent check: voxels whose whole ball is free, then 26-connected BFS.
fn oracle_certify(grid: &OccupancyGrid, s: &Vector3<f64>, g: &Vector3<f64>, radius: f64) -> bool {
    let spec = grid.spec;
    let [nx, ny, nz] = spec.dims.map(|d| d as i64);
    let r = radius / spec.resolution;
    let reach = r.floor() as i64;
    let mut ball = Vec::new();
    for dk in -reach..=reach {
        for dj in -reach..=reach {
            for di in -reach..=reach {
                if ((di * di + dj * dj + dk * dk) as f64) <= r * r {
                    ball.push([di, dj, dk]);
                }
            }
        }
    }
    let inside = |c: [i64; 3]| c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && c[0] < nx && c[1] < ny && c[2] < nz;
    let idx = |c: [i64; 3]| (c[0] + nx * (c[1] + ny * c[2])) as usize;
    let clear: Vec<bool> = spec
        .iter_coords()
        .map(|c| {
            let c = c.map(|v| v as i64);
            ball.iter().all(|o| {
                let q = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
                inside(q) && !grid.occupied[idx(q)]
            })
        })
        .collect();
    let (Some(s), Some(g)) = (spec.locate(s), spec.locate(g)) else { return false };
    let (s, g) = (s.map(|v| v as i64), g.map(|v| v as i64));
    if !clear[idx(s)] || !clear[idx(g)] {
        return false;
    }
    let mut seen = vec![false; clear.len()];
    let mut queue = VecDeque::from([s]);
    seen[idx(s)] = true;
    while let Some(c) = queue.pop_front() {
        if c == g {
            return true;
        }
        for dk in -1..=1 {
            for dj in -1..=1 {
                for di in -1..=1 {
                    let q = [c[0] + di, c[1] + dj, c[2] + dk];
                    if inside(q) && clear[idx(q)] && !seen[idx(q)] {
                        seen[idx(q)] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    false
}

#[test]
fn certification_agrees_with_brute_force() {
    let cfg = SceneConfig::default();
    for seed in [3, 4] {
        let scene = generate_scene(seed, 0.8, &cfg).unwrap();
        let m = &scene.manifest;
        assert!(oracle_certify(&scene.grid, &m.start(), &m.goal(), cfg.agent_radius));
        // a pair pushed into an obstacle, and one far corner
        let corner = Vector3::new(0.025, 0.025, m.start[2]);
        assert_eq!(
            certify_traversable(&scene.grid, &m.start(), &corner, cfg.agent_radius),
            oracle_certify(&scene.grid, &m.start(), &corner, cfg.agent_radius)
        );
    }
    let wall = OrientedBox::axis_aligned(Vector3::new(2.5, 2.5, 1.0), Vector3::new(0.1, 3.0, 1.2), Anchor::Floor);
    let grid = manifest(vec![wall], true).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
    let (s, g) = (Vector3::new(1.025, 2.525, 0.625), Vector3::new(3.975, 2.525, 0.625));
    assert!(!certify_traversable(&grid, &s, &g, 0.2));
    assert!(!oracle_certify(&grid, &s, &g, 0.2));
    let open = manifest(vec![], true).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
    assert!(certify_traversable(&open, &s, &g, 0.2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_pairs_are_walkable_and_on_the_circle(seed in any::<u64>(), x in 0.5f64..4.5, y in 0.5f64..4.5) {
        let b = OrientedBox::axis_aligned(Vector3::new(x, y, 0.5), Vector3::new(0.4, 0.6, 0.5), Anchor::Floor);
        let grid = manifest(vec![b], true).build_grid(DEFAULT_VOXEL_BUDGET).unwrap();
        let mask = erode_walkable(&grid, 0.1, [0.0, 1.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, g) = sample_start_goal(&mask, &mut rng, 2.0, 0.625).unwrap();
        prop_assert!(mask.is_free_at(&s.xy()) && mask.is_free_at(&g.xy()));
        prop_assert!(((s.xy() - g.xy()).norm() - 2.0).abs() <= 0.025 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn more_boxes_never_free_cells(cx in proptest::collection::vec((0.3f64..4.7, 0.3f64..4.7), 1..4)) {
        let boxes: Vec<OrientedBox> = cx
            .iter()
            .map(|&(x, y)| OrientedBox::axis_aligned(Vector3::new(x, y, 0.4), Vector3::new(0.3, 0.2, 0.4), Anchor::Floor))
            .collect();
        let spec = GridSpec::new(Vector3::zeros(), 0.05, [100, 100, 40]).unwrap();
        let fewer = rasterize_boxes(spec, &boxes[..boxes.len() - 1], DEFAULT_VOXEL_BUDGET).unwrap();
        let more = rasterize_boxes(spec, &boxes, DEFAULT_VOXEL_BUDGET).unwrap();
        let a = erode_walkable(&fewer, 0.1, [0.0, 1.9]);
        let b = erode_walkable(&more, 0.1, [0.0, 1.9]);
        prop_assert!(b.free.iter().zip(&a.free).all(|(m, f)| !m || *f));
        // the box centres themselves are blocked
        for &(x, y) in &cx {
            prop_assert!(!b.is_free_at(&Vector2::new(x, y)));
        }
    }

    #[test]
    fn manifests_roundtrip_through_json(seed in 0u64..1000, d in 0.0f64..1.0) {
        let boxes = generate_boxes(seed, d, [5.0, 5.0, 2.0]);
        let mut m = manifest(boxes, true);
        m.seed = seed;
        m.difficulty = d;
        let back = SceneManifest::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
        prop_assert_eq!(back, m);
    }
}
