use fieldnav_core::field::{
    attractive_potential, build_field, geodesic_field, obs_field, query_humanoid_pf, BodyPartState, FieldParams,
};
use fieldnav_core::voxel::{gradient_central, rasterize_boxes, Anchor, GridSpec, OccupancyGrid, OrientedBox, ScalarField, Trilinear};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Plain O(V^2) Dijkstra: repeatedly settle the unsettled voxel with the
/// smallest tentative distance.
fn reference_dijkstra(grid: &OccupancyGrid, src: [usize; 3]) -> Vec<f64> {
    let spec = grid.spec;
    let n = spec.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    dist[spec.index(src)] = 0.0;
    loop {
        let mut best = None;
        for v in 0..n {
            if !settled[v] && dist[v].is_finite() && best.is_none_or(|b: usize| dist[v] < dist[b]) {
                best = Some(v);
            }
        }
        let Some(u) = best else { break };
        settled[u] = true;
        let c = spec.coords(u);
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 && dz == 0 {
                        continue;
                    }
                    let q = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if (0..3).any(|a| q[a] < 0 || q[a] >= spec.dims[a] as i64) {
                        continue;
                    }
                    let w = match dx.abs() + dy.abs() + dz.abs() {
                        1 => spec.resolution,
                        2 => spec.resolution * 2f64.sqrt(),
                        _ => spec.resolution * 3f64.sqrt(),
                    };
                    let v = spec.index([q[0] as usize, q[1] as usize, q[2] as usize]);
                    if !grid.occupied[v] && dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
        }
    }
    dist
}

#[test]
fn geodesic_matches_reference_dijkstra_through_a_gap() {
    let spec = GridSpec::new(Vector3::zeros(), 0.1, [12, 12, 12]).unwrap();
    let mut grid = OccupancyGrid::empty(spec);
    for c in spec.iter_coords() {
        if c[0] == 6 && !(c[1] == 3 && c[2] == 8) {
            grid.set(c, true);
        }
    }
    let src = [1, 9, 2];
    let ours = geodesic_field(&grid, &spec.center(src)).unwrap();
    let oracle = reference_dijkstra(&grid, src);
    assert_eq!(ours.values, oracle);
    // voxels behind the wall are reachable only through the gap
    assert!(ours.get([10, 9, 2]).is_finite());
    assert!(ours.get([10, 9, 2]) > 0.9);
}

#[test]
fn geodesic_matches_reference_on_random_clutter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let spec = GridSpec::new(Vector3::zeros(), 0.05, [10, 9, 8]).unwrap();
        let occ: Vec<bool> = (0..spec.len()).map(|_| rng.random::<f64>() < 0.35).collect();
        let mut grid = OccupancyGrid::from_vec(spec, occ).unwrap();
        grid.set([0, 0, 0], false);
        let ours = geodesic_field(&grid, &spec.center([0, 0, 0])).unwrap();
        assert_eq!(ours.values, reference_dijkstra(&grid, [0, 0, 0]));
    }
}

#[test]
fn attractive_scale_on_corridor() {
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [20, 3, 3]).unwrap();
    let g = geodesic_field(&OccupancyGrid::empty(spec), &spec.center([0, 1, 1])).unwrap();
    let a = attractive_potential(&g, 2.5);
    assert!((a.get([10, 1, 1]) - 25.0 * 0.05).abs() < 1e-12);
}

#[test]
fn corridor_guidance_points_at_goal() {
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [40, 5, 5]).unwrap();
    let f = build_field(&OccupancyGrid::empty(spec), &spec.center([2, 2, 2]), &FieldParams::default()).unwrap();
    for i in 3..39 {
        let v = f.guidance.get([i, 2, 2]);
        let cos = v.normalize().dot(&Vector3::new(-1.0, 0.0, 0.0));
        assert!(cos >= 1f64.to_radians().cos(), "voxel {i}: {v:?}");
    }
}

#[test]
fn guidance_near_goal_points_inward() {
    let spec = GridSpec::new(Vector3::zeros(), 0.1, [9, 9, 9]).unwrap();
    let goal = [4, 4, 4];
    let f = build_field(&OccupancyGrid::empty(spec), &spec.center(goal), &FieldParams::default()).unwrap();
    for c in spec.iter_coords() {
        let off: Vec<i64> = (0..3).map(|a| c[a] as i64 - goal[a] as i64).collect();
        if off.iter().all(|o| o.abs() <= 1) && off.iter().any(|&o| o != 0) {
            let to_goal = spec.center(goal) - spec.center(c);
            assert!(f.guidance.get(c).dot(&to_goal) > 0.0, "{c:?}");
        }
    }
}

fn wall_scene() -> (OccupancyGrid, GridSpec) {
    // wall filling y < 0.5 along the whole x extent
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [60, 30, 10]).unwrap();
    let wall = OrientedBox::axis_aligned(Vector3::new(1.5, 0.25, 0.25), Vector3::new(1.6, 0.25, 0.4), Anchor::Floor);
    (rasterize_boxes(spec, &[wall], 1 << 24).unwrap(), spec)
}

#[test]
fn wall_pushes_away_and_dominates_near_contact() {
    let (grid, spec) = wall_scene();
    let goal = spec.center([55, 12, 5]);
    let f = build_field(&grid, &goal, &FieldParams::default()).unwrap();
    // the first free row sits at y = 0.525
    let p = spec.center([10, 10, 5]);
    assert!(f.guidance.get([10, 10, 5]).dot(&f.sdf_grad.get([10, 10, 5])) > 0.0);
    let d0 = f.params.d0;
    for y in [0.515, 0.53, 0.56, 0.6] {
        let q = Vector3::new(p.x + 0.013, y, p.z);
        let d = f.sdf_filled.sample(&q).unwrap();
        assert!(d < d0 / 4.0);
        let part = BodyPartState { id: 0, position: q, velocity: Vector3::zeros(), is_root: true, radius: 0.05 };
        let query = query_humanoid_pf(&f, &part).unwrap();
        let gd = f.sdf_grad.sample(&q).unwrap();
        assert!(query.f_h.dot(&gd) > 0.0, "y = {y}");
    }
}

fn symmetric_scene() -> (OccupancyGrid, GridSpec) {
    // mirror plane y = 1.025 passes through the centres of row j = 20
    let spec = GridSpec::new(Vector3::zeros(), 0.05, [50, 41, 12]).unwrap();
    let boxes = [
        OrientedBox::axis_aligned(Vector3::new(1.2, 1.025, 0.3), Vector3::new(0.1, 0.3, 0.3), Anchor::Floor),
        OrientedBox::axis_aligned(Vector3::new(0.6, 0.4, 0.3), Vector3::new(0.15, 0.1, 0.3), Anchor::Floor),
        OrientedBox::axis_aligned(Vector3::new(0.6, 1.65, 0.3), Vector3::new(0.15, 0.1, 0.3), Anchor::Floor),
    ];
    (rasterize_boxes(spec, &boxes, 1 << 24).unwrap(), spec)
}

#[test]
fn mirrored_queries_are_mirror_images() {
    let (grid, spec) = symmetric_scene();
    // the scene itself is mirror symmetric
    for c in spec.iter_coords() {
        assert_eq!(grid.get(c), grid.get([c[0], 40 - c[1], c[2]]));
    }
    let goal = spec.center([45, 20, 6]);
    let f = build_field(&grid, &goal, &FieldParams::default()).unwrap();
    let c = 1.025;
    let mirror = |v: Vector3<f64>| Vector3::new(v.x, 2.0 * c - v.y, v.z);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let p = Vector3::new(rng.random_range(0.1..2.4), rng.random_range(0.1..1.0), rng.random_range(0.1..0.5));
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a = BodyPartState { id: 0, position: p, velocity: v, is_root: rng.random(), radius: 0.05 };
        let b = BodyPartState { position: mirror(p), velocity: Vector3::new(v.x, -v.y, v.z), ..a };
        let qa = query_humanoid_pf(&f, &a).unwrap();
        let qb = query_humanoid_pf(&f, &b).unwrap();
        let expect = Vector3::new(qa.f_h.x, -qa.f_h.y, qa.f_h.z);
        assert!((qb.f_h - expect).abs().max() <= 1e-9, "{p:?}: {:?} vs {:?}", qa.f_h, qb.f_h);
    }
    // on the plane itself the lateral component cancels
    for i in 1..49 {
        assert_eq!(f.guidance.get([i, 20, 6]).y, 0.0);
    }
}

#[test]
fn magnitude_law_and_root_ratio() {
    let (grid, spec) = symmetric_scene();
    let f = build_field(&grid, &spec.center([45, 20, 6]), &FieldParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let p = Vector3::new(rng.random_range(0.1..2.4), rng.random_range(0.1..1.95), rng.random_range(0.1..0.5));
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
        let root = BodyPartState { id: 0, position: p, velocity: v, is_root: true, radius: 0.05 };
        let other = BodyPartState { is_root: false, ..root };
        let qr = query_humanoid_pf(&f, &root).unwrap();
        let qo = query_humanoid_pf(&f, &other).unwrap();
        if f.guidance.sample(&p).unwrap().norm() > f.params.eps_norm {
            assert!((qr.f_h.norm() - qr.w0 * qr.w1).abs() < 1e-12);
            assert!((qr.kappa - f.params.kappa_max * qr.f_h.norm()).abs() < 1e-9);
            assert!((qr.mu.norm() - 1.0).abs() < 1e-12);
        }
        assert!((qo.f_h * 2.0 - qr.f_h).abs().max() < 1e-15);
        assert_eq!(qo.mu, qr.mu);
    }
}

#[test]
fn obs_field_layout() {
    let (grid, spec) = symmetric_scene();
    let f = build_field(&grid, &spec.center([45, 20, 6]), &FieldParams::default()).unwrap();
    let parts: Vec<BodyPartState> = (0..13)
        .map(|id| BodyPartState {
            id,
            position: Vector3::new(0.2 + 0.05 * id as f64, 1.0, 0.3),
            velocity: Vector3::zeros(),
            is_root: id == 6,
            radius: 0.05,
        })
        .collect();
    let obs = obs_field(&f, &parts, 13).unwrap();
    assert_eq!(obs.len(), 39);
    let mut shuffled = parts.clone();
    shuffled.reverse();
    assert_eq!(obs_field(&f, &shuffled, 13).unwrap(), obs);
    for (k, p) in parts.iter().enumerate() {
        let q = query_humanoid_pf(&f, p).unwrap();
        assert_eq!(&obs[3 * k..3 * k + 3], q.f_h.as_slice());
    }
}

#[test]
fn guidance_matches_finite_differences_of_sampled_potential() {
    let (grid, spec) = symmetric_scene();
    let f = build_field(&grid, &spec.center([45, 20, 6]), &FieldParams::default()).unwrap();
    let h = spec.resolution;
    let lo = spec.center([2, 2, 2]);
    let hi = spec.center([spec.dims[0] - 3, spec.dims[1] - 3, spec.dims[2] - 3]);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = Vector3::from_fn(|a, _| rng.random_range(lo[a]..hi[a]));
        let fd = Vector3::from_fn(|a, _| {
            let e = Vector3::ith(a, h);
            let up = f.potential_filled.sample(&(p + e)).unwrap();
            let dn = f.potential_filled.sample(&(p - e)).unwrap();
            -(up - dn) / (2.0 * h)
        });
        let g = f.guidance.sample(&p).unwrap();
        assert!((g - fd).norm() <= 1e-6 * g.norm().max(1.0), "{p:?}: {g:?} vs {fd:?}");
    }
}

fn random_scene(rng: &mut ChaCha8Rng) -> OccupancyGrid {
    let spec = GridSpec::new(Vector3::zeros(), 0.1, [30, 30, 8]).unwrap();
    let boxes: Vec<OrientedBox> = (0..6)
        .map(|_| {
            OrientedBox::axis_aligned(
                Vector3::new(rng.random_range(0.3..2.7), rng.random_range(0.3..2.7), 0.4),
                Vector3::new(rng.random_range(0.05..0.4), rng.random_range(0.05..0.4), 0.5),
                Anchor::Floor,
            )
        })
        .collect();
    rasterize_boxes(spec, &boxes, 1 << 24).unwrap()
}

/// Descent along the attractive flow reaches the goal from every reachable
/// start. The only geodesic increases are one-voxel detours off walls, where
/// the filled obstacle interior dominates the central-difference stencil.
#[test]
fn descending_the_attractive_field_shortens_the_geodesic() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut scenes = 0;
    while scenes < 20 {
        let grid = random_scene(&mut rng);
        let spec = grid.spec;
        let goal_ijk = [rng.random_range(1..29), rng.random_range(1..29), 4];
        if grid.get(goal_ijk) {
            continue;
        }
        let goal = spec.center(goal_ijk);
        let geo = geodesic_field(&grid, &goal).unwrap();
        let att = attractive_potential(&geo, 1.0).sentinel_filled(1.0);
        let flow = gradient_central(&att).map(|g| -g);
        let start = spec.coords(rng.random_range(0..spec.len()));
        if !geo.get(start).is_finite() {
            continue;
        }
        scenes += 1;
        let diag = spec.resolution * 3f64.sqrt();
        let mut p = spec.center(start);
        let mut cell = start;
        let mut steps = 0;
        while (p - goal).norm() > diag {
            p += flow.sample(&p).unwrap().normalize() * 0.2 * spec.resolution;
            let next = spec.locate(&p).unwrap();
            assert!(geo.get(next).is_finite(), "walked into an obstacle at {next:?}");
            if geo.get(next) > geo.get(cell) {
                assert!(geo.get(next) - geo.get(cell) <= diag);
                let touches_wall = neighbours(&spec, cell).iter().any(|n| grid.get(*n));
                assert!(touches_wall, "ascent in open space at {cell:?}");
            }
            cell = next;
            steps += 1;
            assert!(steps < 5000, "descent did not reach the goal");
        }
    }
}

fn neighbours(spec: &GridSpec, c: [usize; 3]) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let q = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                if (dx, dy, dz) != (0, 0, 0) && (0..3).all(|a| q[a] >= 0 && q[a] < spec.dims[a] as i64) {
                    out.push([q[0] as usize, q[1] as usize, q[2] as usize]);
                }
            }
        }
    }
    out
}

#[test]
fn sentinel_fill_keeps_fields_finite() {
    let (grid, spec) = wall_scene();
    let f = build_field(&grid, &spec.center([30, 20, 5]), &FieldParams::default()).unwrap();
    assert!(f.potential_filled.values.iter().all(|v| v.is_finite()));
    assert!(f.guidance.values.iter().all(|v| v.iter().all(|c| c.is_finite())));
    let max = f.potential.max_finite().unwrap();
    let occupied = spec.index([10, 2, 5]);
    assert!(!f.potential.values[occupied].is_finite());
    assert!(f.potential_filled.values[occupied] > max);
    let _ = ScalarField::constant(spec, 0.0);
}

