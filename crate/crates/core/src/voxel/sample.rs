//! Trilinear sampling and central-difference gradients.

use nalgebra::Vector3;
use std::ops::{Add, Mul};

use super::grid::{GridError, GridSpec, ScalarField, VectorField};

/// Continuous query of a lattice at a world point by trilinear blending of
/// the eight surrounding cell-centre values.
pub trait Trilinear {
    type Output;

    fn sample(&self, p: &Vector3<f64>) -> Result<Self::Output, GridError>;
}

/// Per-axis lower cell index and blend fraction. Degenerate axes (one cell)
/// collapse onto index 0 with fraction 0.
fn corner(spec: &GridSpec, p: &Vector3<f64>) -> Result<([usize; 3], [f64; 3]), GridError> {
    let t = spec.sample_coords(p)?;
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let n = spec.dims[a];
        if n == 1 {
            continue;
        }
        let i = (t[a].floor() as usize).min(n - 2);
        base[a] = i;
        frac[a] = t[a] - i as f64;
    }
    Ok((base, frac))
}

fn blend<T>(spec: &GridSpec, get: impl Fn(usize) -> T, base: [usize; 3], frac: [f64; 3]) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let step = |a: usize| if spec.dims[a] > 1 { 1 } else { 0 };
    let at = |di: usize, dj: usize, dk: usize| {
        get(spec.index([base[0] + di * step(0), base[1] + dj * step(1), base[2] + dk * step(2)]))
    };
    let [fx, fy, fz] = frac;
    let lerp = |a: T, b: T, t: f64| a * (1.0 - t) + b * t;
    let c00 = lerp(at(0, 0, 0), at(1, 0, 0), fx);
    let c10 = lerp(at(0, 1, 0), at(1, 1, 0), fx);
    let c01 = lerp(at(0, 0, 1), at(1, 0, 1), fx);
    let c11 = lerp(at(0, 1, 1), at(1, 1, 1), fx);
    lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
}

impl Trilinear for ScalarField {
    type Output = f64;

    fn sample(&self, p: &Vector3<f64>) -> Result<f64, GridError> {
        let (base, frac) = corner(&self.spec, p)?;
        Ok(blend(&self.spec, |i| self.values[i], base, frac))
    }
}

impl Trilinear for VectorField {
    type Output = Vector3<f64>;

    fn sample(&self, p: &Vector3<f64>) -> Result<Vector3<f64>, GridError> {
        let (base, frac) = corner(&self.spec, p)?;
        Ok(blend(&self.spec, |i| self.values[i], base, frac))
    }
}

/// `+grad` of a (sentinel-filled) scalar field: central differences in the
/// interior, one-sided differences on boundary layers, zero along axes with
/// a single cell.
pub fn gradient_central(field: &ScalarField) -> VectorField {
    let spec = field.spec;
    let h = spec.resolution;
    let values = spec
        .iter_coords()
        .map(|ijk| {
            Vector3::from_fn(|a, _| {
                let n = spec.dims[a];
                if n == 1 {
                    return 0.0;
                }
                let at = |i: usize| {
                    let mut c = ijk;
                    c[a] = i;
                    field.get(c)
                };
                let i = ijk[a];
                if i == 0 {
                    (at(1) - at(0)) / h
                } else if i == n - 1 {
                    (at(n - 1) - at(n - 2)) / h
                } else {
                    (at(i + 1) - at(i - 1)) / (2.0 * h)
                }
            })
        })
        .collect();
    VectorField { spec, values }
}
