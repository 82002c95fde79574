use crate::voxel::ScalarField;

/// `eta * geodesic`, keeping sentinels.
pub fn attractive_potential(geodesic: &ScalarField, eta: f64) -> ScalarField {
    geodesic.map(|g| if g.is_finite() { eta * g } else { g })
}

/// Repulsion at signed distance `d`: zero beyond `d0`, the inverse-distance
/// barrier in between, and a plateau below `d_clamp` (inside obstacles too).
pub fn repulsive_value(d: f64, xi: f64, d0: f64, d_clamp: f64) -> f64 {
    if d >= d0 {
        return 0.0;
    }
    let d = d.max(d_clamp);
    let s = 1.0 / d - 1.0 / d0;
    0.5 * xi * s * s
}

/// Repulsive potential over a signed distance field. `+inf` (no obstacle)
/// maps to zero and `-inf` (solid) to the plateau.
pub fn repulsive_potential(sdf: &ScalarField, xi: f64, d0: f64, d_clamp: f64) -> ScalarField {
    sdf.map(|d| repulsive_value(d, xi, d0, d_clamp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel::{GridSpec, UNREACHABLE};
    use nalgebra::Vector3;

    #[test]
    fn repulsion_profile() {
        assert_eq!(repulsive_value(0.5, 1.0, 0.5, 0.05), 0.0);
        assert_eq!(repulsive_value(1.0, 1.0, 0.5, 0.05), 0.0);
        assert_eq!(repulsive_value(0.25, 1.0, 0.5, 0.05), 2.0);
        let plateau = repulsive_value(0.05, 1.0, 0.5, 0.05);
        assert_eq!(repulsive_value(0.01, 1.0, 0.5, 0.05), plateau);
        assert_eq!(repulsive_value(-0.3, 1.0, 0.5, 0.05), plateau);
        assert_eq!(repulsive_value(f64::NEG_INFINITY, 1.0, 0.5, 0.05), plateau);
        assert_eq!(repulsive_value(UNREACHABLE, 1.0, 0.5, 0.05), 0.0);
    }

    #[test]
    fn repulsion_is_continuous_at_range() {
        let below = repulsive_value(0.5 - 1e-9, 0.05, 0.5, 0.05);
        assert!(below < 1e-15);
    }

    #[test]
    fn attractive_scaling() {
        let spec = GridSpec::new(Vector3::zeros(), 0.05, [3, 1, 1]).unwrap();
        let g = ScalarField::new(spec, vec![0.0, 0.5, UNREACHABLE]).unwrap();
        assert_eq!(attractive_potential(&g, 0.0).values[..2], [0.0, 0.0]);
        assert_eq!(attractive_potential(&g, 1.0), g);
        let a = attractive_potential(&g, 2.5);
        assert!((a.values[1] - 1.25).abs() < 1e-15);
        assert_eq!(a.values[2], UNREACHABLE);
    }
}
