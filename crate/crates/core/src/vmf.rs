//! Von Mises–Fisher directional prior on the unit sphere and the
//! whole-body log-likelihood reward built from it.

use std::f64::consts::PI;

use nalgebra::Vector3;
use thiserror::Error;

use crate::field::FieldQuery;

/// Speeds below this (m/s) carry no usable direction.
pub const VELOCITY_FLOOR: f64 = 1e-3;

/// Tolerance on unit-norm inputs.
const UNIT_TOL: f64 = 1e-6;

const SERIES_BELOW: f64 = 1e-4;
const ASYMPTOTIC_ABOVE: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VmfError {
    #[error("concentration must be finite and >= 0, got {0}")]
    BadKappa(f64),
    #[error("{what} is not unit length (norm {norm})")]
    NotUnit { what: &'static str, norm: f64 },
    #[error("expected {expected} motion samples, got {got}")]
    Arity { got: usize, expected: usize },
}

/// Log of the 3D normalizer `kappa / (4 pi sinh kappa)`.
pub fn log_c3(kappa: f64) -> Result<f64, VmfError> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(VmfError::BadKappa(kappa));
    }
    let v = if kappa < SERIES_BELOW {
        let k2 = kappa * kappa;
        -(4.0 * PI).ln() - k2 / 6.0 + k2 * k2 / 180.0
    } else if kappa > ASYMPTOTIC_ABOVE {
        // sinh k = e^k (1 - e^{-2k}) / 2
        kappa.ln() - kappa - (2.0 * PI).ln() - (-(-2.0 * kappa).exp()).ln_1p()
    } else {
        kappa.ln() - (4.0 * PI).ln() - kappa.sinh().ln()
    };
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfPrior {
    pub mu: Vector3<f64>,
    pub kappa: f64,
}

impl VmfPrior {
    pub fn uniform() -> Self {
        Self { mu: Vector3::x(), kappa: 0.0 }
    }
}

fn check_unit(what: &'static str, v: &Vector3<f64>) -> Result<(), VmfError> {
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
        return Err(VmfError::NotUnit { what, norm });
    }
    Ok(())
}

pub fn vmf_log_density(prior: &VmfPrior, v_hat: &Vector3<f64>) -> Result<f64, VmfError> {
    check_unit("direction", v_hat)?;
    let c = log_c3(prior.kappa)?;
    if prior.kappa == 0.0 {
        return Ok(c);
    }
    check_unit("mean direction", &prior.mu)?;
    Ok(c + prior.kappa * prior.mu.dot(v_hat))
}

/// Prior implied by a weighted field query: mean along `f_h`, concentration
/// `kappa_max * |f_h|` (already carried by the query).
pub fn derive_prior(query: &FieldQuery) -> VmfPrior {
    let n = query.f_h.norm();
    if n > 0.0 {
        VmfPrior { mu: query.f_h / n, kappa: query.kappa }
    } else {
        VmfPrior::uniform()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    pub v_hat: Vector3<f64>,
    pub valid: bool,
}

impl MotionSample {
    pub fn from_velocity(v: &Vector3<f64>) -> Self {
        let speed = v.norm();
        if speed.is_finite() && speed >= VELOCITY_FLOOR {
            Self { v_hat: v / speed, valid: true }
        } else {
            Self { v_hat: Vector3::zeros(), valid: false }
        }
    }
}

/// Sum of per-part log densities. Parts without a usable direction add only
/// their log normalizer.
pub fn r_field(priors: &[VmfPrior], motion: &[MotionSample]) -> Result<f64, VmfError> {
    if priors.len() != motion.len() {
        return Err(VmfError::Arity { got: motion.len(), expected: priors.len() });
    }
    priors.iter().zip(motion).try_fold(0.0, |acc, (p, m)| {
        let term = if m.valid { vmf_log_density(p, &m.v_hat)? } else { log_c3(p.kappa)? };
        Ok(acc + term)
    })
}
