use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid field parameter `{name}`: {reason}")]
pub struct ParamError {
    pub name: &'static str,
    pub reason: String,
}

/// Scalars controlling field construction and queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldParams {
    /// Attractive scale.
    pub eta: f64,
    /// Repulsive scale.
    pub xi: f64,
    /// Obstacle influence range, metres.
    pub d0: f64,
    /// Collision-urgency scale.
    pub lambda: f64,
    /// Concentration of the motion prior per unit of weighted field.
    pub kappa_max: f64,
    /// Distances below this are treated as this for repulsion, metres.
    pub d_clamp: f64,
    /// Field magnitudes at or below this count as zero.
    pub eps_norm: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self { eta: 1.0, xi: 0.05, d0: 0.5, lambda: 1.0, kappa_max: 10.0, d_clamp: 0.05, eps_norm: 1e-8 }
    }
}

impl FieldParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |name, reason: &str| Err(ParamError { name, reason: reason.to_string() });
        let all = [
            ("eta", self.eta),
            ("xi", self.xi),
            ("d0", self.d0),
            ("lambda", self.lambda),
            ("kappa_max", self.kappa_max),
            ("d_clamp", self.d_clamp),
            ("eps_norm", self.eps_norm),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return err(name, "must be finite");
            }
        }
        if self.eta < 0.0 {
            return err("eta", "must be >= 0");
        }
        if self.xi < 0.0 {
            return err("xi", "must be >= 0");
        }
        for (name, v) in [("d0", self.d0), ("lambda", self.lambda), ("kappa_max", self.kappa_max)] {
            if v <= 0.0 {
                return err(name, "must be > 0");
            }
        }
        if self.d_clamp <= 0.0 {
            return err("d_clamp", "must be > 0");
        }
        if self.d_clamp >= self.d0 {
            return err("d_clamp", "must be smaller than d0");
        }
        if self.eps_norm <= 0.0 {
            return err("eps_norm", "must be > 0");
        }
        Ok(())
    }

    /// Slope used when filling unreachable voxels of the potential.
    pub fn fill_slope(&self) -> f64 {
        self.eta.max(1.0)
    }
}
