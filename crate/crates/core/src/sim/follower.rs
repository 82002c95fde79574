//! One control step of the field follower.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::agent::{derive_parts, AgentModel, AgentState};
use super::SimError;
use crate::field::{query_all, FieldQuery, HumanoidField};

/// How per-part weights are formed when querying the field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Role weight times collision urgency.
    #[default]
    Priority,
    /// Role weight times a fixed urgency.
    ConstantUrgency(f64),
}

/// Query every part, then apply `weighting`.
pub fn weighted_queries(
    field: &HumanoidField,
    model: &AgentModel,
    state: &AgentState,
    weighting: Weighting,
) -> Result<Vec<FieldQuery>, SimError> {
    let parts = derive_parts(model, state);
    let mut qs = query_all(field, &parts, model.len())?;
    if let Weighting::ConstantUrgency(w1) = weighting {
        for q in &mut qs {
            q.w1 = w1;
            if q.kappa > 0.0 {
                q.f_h = q.mu * (q.w0 * w1);
                q.kappa = field.params.kappa_max * q.w0 * w1;
            }
        }
    }
    Ok(qs)
}

/// `x` shrunk to unit length if longer.
fn saturate(x: Vector2<f64>) -> Vector2<f64> {
    let n = x.norm();
    if n > 1.0 {
        x / n
    } else {
        x
    }
}

fn wrap_angle(a: f64) -> f64 {
    let t = (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    t - std::f64::consts::PI
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Advance `state` by `dt` given the queries taken at `state`. With
/// `reverse` the follower climbs the potential instead of descending it.
pub fn step_with_queries(
    model: &AgentModel,
    state: &AgentState,
    queries: &[FieldQuery],
    dt: f64,
    reverse: bool,
) -> Result<AgentState, SimError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(SimError::Config(format!("dt must lie in (0, 0.1], got {dt}")));
    }
    let sign = if reverse { -1.0 } else { 1.0 };
    let f = |k: usize| -> Vector3<f64> { queries[k].f_h * sign };
    let g = &model.gains;

    let f_root = f(model.root_index);
    let v = saturate(f_root.xy() * g.speed_gain) * model.max_speed;

    let down = mean(model.upper_parts().into_iter().map(|k| (-f(k).z).max(0.0)));
    let up = mean(model.lower_parts().into_iter().map(|k| f(k).z.max(0.0)));
    let h_rate_cap = model.max_crouch_rate / model.top_height();
    let h_rate = (-g.crouch * down + g.lift * up + g.stand * (1.0 - state.height_scale)).clamp(-h_rate_cap, h_rate_cap);

    let left = state.left();
    let side_root = f_root.dot(&left);
    let lateral = mean(model.spine_parts().into_iter().map(|k| f(k).dot(&left) - side_root));
    let l_rate = (g.lean * lateral - g.lean_return * state.lean).clamp(-g.max_lean_rate, g.max_lean_rate);

    let heading = if v.norm() > 1e-12 {
        let max_turn = model.max_turn_rate * dt;
        state.heading + wrap_angle(v.y.atan2(v.x) - state.heading).clamp(-max_turn, max_turn)
    } else {
        state.heading
    };
    let h_new = (state.height_scale + h_rate * dt).clamp(model.min_height_scale(), 1.0);
    let lean_new = (state.lean + l_rate * dt).clamp(-model.max_lateral_offset, model.max_lateral_offset);
    Ok(AgentState {
        root_xy: (state.xy() + v * dt).into(),
        heading,
        height_scale: h_new,
        lean: lean_new,
        root_vel: v.into(),
        heading_rate: wrap_angle(heading - state.heading) / dt,
        crouch_rate: (h_new - state.height_scale) / dt,
        lean_rate: (lean_new - state.lean) / dt,
    })
}

/// Query the field at `state` and take one step.
pub fn step_follower(
    field: &HumanoidField,
    model: &AgentModel,
    state: &AgentState,
    dt: f64,
) -> Result<AgentState, SimError> {
    let qs = weighted_queries(field, model, state, Weighting::Priority)?;
    step_with_queries(model, state, &qs, dt, false)
}
