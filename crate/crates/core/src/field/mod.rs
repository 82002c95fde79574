//! Whole-body guidance field: a geodesic attractive potential plus an
//! inverse-distance repulsive barrier, its negative gradient, and weighted
//! per-body-part queries.

pub mod geodesic;
pub mod params;
pub mod potential;

use nalgebra::Vector3;
use rayon::join;
use thiserror::Error;

pub use geodesic::{geodesic_field, goal_voxel, multi_source_geodesic};
pub use params::{FieldParams, ParamError};
pub use potential::{attractive_potential, repulsive_potential, repulsive_value};

use crate::voxel::{gradient_central, signed_distance, GridError, OccupancyGrid, ScalarField, Trilinear, VectorField};

/// Number of queried body parts on the default agent.
pub const DEFAULT_PART_COUNT: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid goal ({}, {}, {}): {reason}", .goal[0], .goal[1], .goal[2])]
    InvalidGoal { goal: [f64; 3], reason: String },
    #[error(transparent)]
    Domain(#[from] GridError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("expected {expected} body parts with ids 0..{expected}, got {got}")]
    Arity { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyPartState {
    pub id: usize,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub is_root: bool,
    /// Collision sphere radius, metres.
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct HumanoidField {
    /// Distance to the goal through free space; sentinel where unreachable.
    pub geodesic: ScalarField,
    /// Signed distance to obstacles, negative inside.
    pub sdf: ScalarField,
    /// `eta * geodesic + repulsion`, sentinel where the geodesic is.
    pub potential: ScalarField,
    /// Sentinel-free copies used for sampling and differentiation.
    pub potential_filled: ScalarField,
    pub sdf_filled: ScalarField,
    /// `-grad(potential_filled)`.
    pub guidance: VectorField,
    /// `grad(sdf_filled)`.
    pub sdf_grad: VectorField,
    pub goal: Vector3<f64>,
    pub params: FieldParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldQuery {
    pub part: BodyPartState,
    pub f_h: Vector3<f64>,
    pub w0: f64,
    pub w1: f64,
    pub mu: Vector3<f64>,
    pub kappa: f64,
}

/// Which voxels act as the attractive pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalRegion {
    /// The single voxel containing the goal.
    #[default]
    Point,
    /// The unbroken run of free voxels directly above and below the goal
    /// voxel, so every body height is pulled horizontally.
    Column,
}

/// Source voxels for `region`.
pub fn goal_sources(grid: &OccupancyGrid, goal: &Vector3<f64>, region: GoalRegion) -> Result<Vec<[usize; 3]>, FieldError> {
    let [i, j, k] = goal_voxel(grid, goal)?;
    Ok(match region {
        GoalRegion::Point => vec![[i, j, k]],
        GoalRegion::Column => {
            let free = |kk: usize| !grid.get([i, j, kk]);
            let lo = (0..=k).rev().take_while(|&kk| free(kk)).last().unwrap_or(k);
            let hi = (k..grid.spec.dims[2]).take_while(|&kk| free(kk)).last().unwrap_or(k);
            (lo..=hi).map(|kk| [i, j, kk]).collect()
        }
    })
}

pub fn build_field(grid: &OccupancyGrid, goal: &Vector3<f64>, params: &FieldParams) -> Result<HumanoidField, FieldError> {
    build_field_with(grid, goal, params, GoalRegion::Point)
}

pub fn build_field_with(
    grid: &OccupancyGrid,
    goal: &Vector3<f64>,
    params: &FieldParams,
    region: GoalRegion,
) -> Result<HumanoidField, FieldError> {
    params.validate()?;
    let sources = goal_sources(grid, goal, region)?;
    let (geodesic, sdf) = join(|| multi_source_geodesic(grid, &sources), || signed_distance(grid));
    let repulsive = repulsive_potential(&sdf, params.xi, params.d0, params.d_clamp);
    let potential = ScalarField {
        spec: grid.spec,
        values: geodesic
            .values
            .iter()
            .zip(&repulsive.values)
            .map(|(&g, &r)| if g.is_finite() { params.eta * g + r } else { g })
            .collect(),
    };
    let potential_filled = potential.sentinel_filled(params.fill_slope());
    let sdf_filled = sdf.sentinel_filled(1.0);
    let (guidance, sdf_grad) =
        join(|| gradient_central(&potential_filled).map(|g| -g), || gradient_central(&sdf_filled));
    Ok(HumanoidField {
        geodesic,
        sdf,
        potential,
        potential_filled,
        sdf_filled,
        guidance,
        sdf_grad,
        goal: *goal,
        params: *params,
    })
}

/// Role weight: the root outranks every other part.
pub fn priority_w0(part: &BodyPartState) -> f64 {
    if part.is_root {
        1.0
    } else {
        0.5
    }
}

/// Collision-urgency weight `lambda * max(-grad d . v, 0.5) * exp(-d)` with
/// `d` and `grad d` sampled at the part position.
pub fn priority_w1(part: &BodyPartState, sdf: &ScalarField, sdf_grad: &VectorField, lambda: f64) -> Result<f64, FieldError> {
    let d = sdf.sample(&part.position)?;
    let gd = sdf_grad.sample(&part.position)?;
    Ok(urgency(d, &gd, &part.velocity, lambda))
}

/// The urgency formula on already-sampled values.
pub fn urgency(d: f64, grad_d: &Vector3<f64>, velocity: &Vector3<f64>, lambda: f64) -> f64 {
    lambda * (-grad_d.dot(velocity)).max(0.5) * (-d).exp()
}

impl HumanoidField {
    pub fn query(&self, part: &BodyPartState) -> Result<FieldQuery, FieldError> {
        query_humanoid_pf(self, part)
    }

    pub fn sample_guidance(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, FieldError> {
        Ok(self.guidance.sample(p)?)
    }

    pub fn sample_sdf(&self, p: &Vector3<f64>) -> Result<f64, FieldError> {
        Ok(self.sdf_filled.sample(p)?)
    }
}

pub fn query_humanoid_pf(field: &HumanoidField, part: &BodyPartState) -> Result<FieldQuery, FieldError> {
    let f = field.guidance.sample(&part.position)?;
    let w0 = priority_w0(part);
    let w1 = priority_w1(part, &field.sdf_filled, &field.sdf_grad, field.params.lambda)?;
    let norm = f.norm();
    if norm <= field.params.eps_norm {
        return Ok(FieldQuery { part: *part, f_h: Vector3::zeros(), w0, w1, mu: Vector3::x(), kappa: 0.0 });
    }
    let mu = f / norm;
    Ok(FieldQuery { part: *part, f_h: mu * (w0 * w1), w0, w1, mu, kappa: field.params.kappa_max * w0 * w1 })
}

/// Query every part and return them ordered by id. Ids must be exactly
/// `0..expected`.
pub fn query_all(field: &HumanoidField, parts: &[BodyPartState], expected: usize) -> Result<Vec<FieldQuery>, FieldError> {
    let mut sorted: Vec<BodyPartState> = parts.to_vec();
    sorted.sort_by_key(|p| p.id);
    if sorted.len() != expected || sorted.iter().enumerate().any(|(i, p)| p.id != i) {
        return Err(FieldError::Arity { got: parts.len(), expected });
    }
    sorted.iter().map(|p| query_humanoid_pf(field, p)).collect()
}

/// Observation vector: the weighted field vectors of all parts, concatenated
/// in id order as `[x0, y0, z0, x1, ...]`.
pub fn obs_field(field: &HumanoidField, parts: &[BodyPartState], expected: usize) -> Result<Vec<f64>, FieldError> {
    Ok(query_all(field, parts, expected)?.iter().flat_map(|q| q.f_h.iter().copied().collect::<Vec<_>>()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::GridSpec;

    fn part(p: Vector3<f64>, v: Vector3<f64>, root: bool) -> BodyPartState {
        BodyPartState { id: 0, position: p, velocity: v, is_root: root, radius: 0.05 }
    }

    #[test]
    fn w0_is_role_only() {
        let a = part(Vector3::zeros(), Vector3::zeros(), true);
        let b = part(Vector3::new(3.0, 1.0, 0.0), Vector3::new(0.0, 5.0, 0.0), true);
        assert_eq!(priority_w0(&a), 1.0);
        assert_eq!(priority_w0(&b), 1.0);
        assert_eq!(priority_w0(&BodyPartState { is_root: false, ..a }), 0.5);
    }

    #[test]
    fn urgency_values() {
        let g = Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(urgency(0.0, &g, &Vector3::new(1.0, 0.0, 0.0), 1.0), 0.5);
        assert!((urgency(1.0, &g, &Vector3::zeros(), 1.0) - 0.5 * (-1f64).exp()).abs() < 1e-15);
        let w = urgency(0.1, &g, &Vector3::new(-2.0, 0.0, 0.0), 1.0);
        assert!((w - 2.0 * (-0.1f64).exp()).abs() < 1e-15);
        assert!((w - 1.8097).abs() < 1e-4);
    }

    #[test]
    fn zero_field_gives_zero_query() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [3, 3, 3]).unwrap();
        let grid = OccupancyGrid::empty(spec);
        let mut f = build_field(&grid, &spec.center([1, 1, 1]), &FieldParams::default()).unwrap();
        f.guidance = f.guidance.map(|_| Vector3::zeros());
        let q = f.query(&part(spec.center([1, 1, 1]), Vector3::zeros(), true)).unwrap();
        assert_eq!(q.f_h, Vector3::zeros());
        assert_eq!(q.kappa, 0.0);
    }

    #[test]
    fn arity_checks() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [5, 5, 5]).unwrap();
        let f = build_field(&OccupancyGrid::empty(spec), &spec.center([0, 0, 0]), &FieldParams::default()).unwrap();
        let mk = |id| BodyPartState { id, ..part(spec.center([2, 2, 2]), Vector3::zeros(), id == 0) };
        let parts: Vec<_> = (0..3).map(mk).collect();
        assert_eq!(obs_field(&f, &parts, 3).unwrap().len(), 9);
        assert!(matches!(obs_field(&f, &parts, 4), Err(FieldError::Arity { got: 3, expected: 4 })));
        let dup = vec![mk(0), mk(0), mk(2)];
        assert!(obs_field(&f, &dup, 3).is_err());
    }

    #[test]
    fn column_goal_spans_the_free_run() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [3, 3, 8]).unwrap();
        let mut grid = OccupancyGrid::empty(spec);
        grid.set([1, 1, 6], true);
        let s = goal_sources(&grid, &spec.center([1, 1, 2]), GoalRegion::Column).unwrap();
        assert_eq!(s, (0..6).map(|k| [1, 1, k]).collect::<Vec<_>>());
        let f = build_field_with(&grid, &spec.center([1, 1, 2]), &FieldParams::default(), GoalRegion::Column).unwrap();
        assert_eq!(f.geodesic.get([1, 1, 5]), 0.0);
        // around the blocked voxel through two diagonal steps
        assert!((f.geodesic.get([1, 1, 7]) - 0.2 * 2f64.sqrt()).abs() < 1e-12);
        // no vertical pull beside the column
        let attract = FieldParams { xi: 0.0, ..FieldParams::default() };
        let f = build_field_with(&grid, &spec.center([1, 1, 2]), &attract, GoalRegion::Column).unwrap();
        assert_eq!(f.guidance.get([0, 1, 3]).z, 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [3, 3, 3]).unwrap();
        let p = FieldParams { d0: -1.0, ..Default::default() };
        assert!(matches!(
            build_field(&OccupancyGrid::empty(spec), &spec.center([0, 0, 0]), &p),
            Err(FieldError::Params(_))
        ));
    }
}
