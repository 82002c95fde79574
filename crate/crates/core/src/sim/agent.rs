//! Kinematic multi-part body: a root on the floor plane, a vertical spine that
//! scales when crouching, and a sideways lean that bends the upper body.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::field::BodyPartState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub name: String,
    /// `[forward, left, up]` in the root frame at full height; `up` is
    /// measured from the floor.
    pub offset: [f64; 3],
    pub radius: f64,
}

fn part(name: &str, left: f64, up: f64, radius: f64) -> PartSpec {
    PartSpec { name: name.into(), offset: [0.0, left, up], radius }
}

/// Gains of the field follower. Rates are in height-scale units per second
/// for crouching and metres per second for leaning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerGains {
    /// Horizontal root command is `max_speed * sat(speed_gain * f_root)`.
    pub speed_gain: f64,
    /// Crouch response to downward push on the upper body.
    pub crouch: f64,
    /// Stand-up response to upward push on the legs.
    pub lift: f64,
    /// Pull back toward full height.
    pub stand: f64,
    /// Lean response to sideways push on the spine relative to the root.
    pub lean: f64,
    /// Pull back toward an upright spine.
    pub lean_return: f64,
    /// Largest lean speed, m/s.
    pub max_lean_rate: f64,
}

impl Default for FollowerGains {
    fn default() -> Self {
        Self { speed_gain: 50.0, crouch: 6.0, lift: 6.0, stand: 3.0, lean: 2.0, lean_return: 3.0, max_lean_rate: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentModel {
    pub parts: Vec<PartSpec>,
    pub root_index: usize,
    /// Height of the top probe when fully crouched and when standing, metres.
    pub crouch_range: [f64; 2],
    pub max_speed: f64,
    /// Largest vertical speed of the top probe, m/s.
    pub max_crouch_rate: f64,
    pub max_lateral_offset: f64,
    /// Largest heading change, rad/s.
    pub max_turn_rate: f64,
    pub gains: FollowerGains,
}

const KNEE: f64 = 0.45;
const FOOT: f64 = 0.32;
const TURN: f64 = 6.0;

impl Default for AgentModel {
    fn default() -> Self {
        let parts = vec![
            part("head", 0.0, 1.30, 0.06),
            part("neck", 0.0, 1.15, 0.05),
            part("shoulder_l", 0.15, 1.05, 0.05),
            part("shoulder_r", -0.15, 1.05, 0.05),
            part("chest", 0.0, 0.95, 0.05),
            part("abdomen", 0.0, 0.78, 0.05),
            part("pelvis", 0.0, 0.60, 0.05),
            part("hip_l", 0.12, 0.60, 0.05),
            part("hip_r", -0.12, 0.60, 0.05),
            part("knee_l", 0.10, KNEE, 0.05),
            part("knee_r", -0.10, KNEE, 0.05),
            part("foot_l", 0.10, FOOT, 0.05),
            part("foot_r", -0.10, FOOT, 0.05),
        ];
        Self {
            parts,
            root_index: 6,
            crouch_range: [0.91, 1.30],
            max_speed: 1.0,
            max_crouch_rate: 0.6,
            max_lateral_offset: 0.2,
            max_turn_rate: TURN,
            gains: FollowerGains::default(),
        }
    }
}

impl AgentModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.parts.is_empty() {
            return bad("agent needs at least one part".into());
        }
        if self.root_index >= self.parts.len() {
            return bad(format!("root_index {} out of range", self.root_index));
        }
        for p in &self.parts {
            if !(p.radius.is_finite() && p.radius > 0.0) || p.offset.iter().any(|c| !c.is_finite()) {
                return bad(format!("part `{}` needs finite offsets and a positive radius", p.name));
            }
            if p.offset[2] < 0.0 {
                return bad(format!("part `{}` sits below the floor", p.name));
            }
        }
        let [lo, hi] = self.crouch_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("crouch_range {:?} must satisfy 0 < min <= max", self.crouch_range));
        }
        let top = self.top_height();
        if (top - hi).abs() > 1e-9 {
            return bad(format!("highest part sits at {top} m but crouch_range max is {hi} m"));
        }
        let g = &self.gains;
        let rates = [self.max_speed, self.max_crouch_rate, self.max_lateral_offset, self.max_turn_rate, g.max_lean_rate];
        let gains = [g.speed_gain, g.crouch, g.lift, g.stand, g.lean, g.lean_return];
        if rates.iter().chain(&gains).any(|v| !(v.is_finite() && *v >= 0.0)) || self.max_speed == 0.0 {
            return bad("speeds, limits and gains must be finite and >= 0, max_speed > 0".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn top_height(&self) -> f64 {
        self.parts.iter().map(|p| p.offset[2]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn root_height(&self) -> f64 {
        self.parts[self.root_index].offset[2]
    }

    pub fn min_height_scale(&self) -> f64 {
        self.crouch_range[0] / self.crouch_range[1]
    }

    /// How much of the lean a part follows: 0 at or below the root, 1 at the
    /// top probe, linear in between.
    pub fn lean_weight(&self, k: usize) -> f64 {
        let (zr, zt) = (self.root_height(), self.top_height());
        if zt <= zr {
            return 0.0;
        }
        ((self.parts[k].offset[2] - zr) / (zt - zr)).clamp(0.0, 1.0)
    }

    /// Parts in the upper half of the span between root and top probe.
    pub fn upper_parts(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.lean_weight(k) >= 0.5 - 1e-9).collect()
    }

    /// Parts strictly below the root.
    pub fn lower_parts(&self) -> Vec<usize> {
        let zr = self.root_height();
        (0..self.len()).filter(|&k| self.parts[k].offset[2] < zr).collect()
    }

    /// Parts that follow the lean at all.
    pub fn spine_parts(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.lean_weight(k) > 0.0).collect()
    }
}

/// Pose and rates of the agent. Part positions are derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub root_xy: [f64; 2],
    /// Facing direction, radians from +x.
    pub heading: f64,
    pub height_scale: f64,
    /// Sideways shift of the top probe along the root-left axis, metres.
    pub lean: f64,
    pub root_vel: [f64; 2],
    pub heading_rate: f64,
    pub crouch_rate: f64,
    pub lean_rate: f64,
}

impl AgentState {
    /// Standing still at `xy`, facing `toward`.
    pub fn standing(xy: Vector2<f64>, toward: Vector2<f64>) -> Self {
        let d = toward - xy;
        let heading = if d.norm() > 0.0 { d.y.atan2(d.x) } else { 0.0 };
        Self {
            root_xy: xy.into(),
            heading,
            height_scale: 1.0,
            lean: 0.0,
            root_vel: [0.0; 2],
            heading_rate: 0.0,
            crouch_rate: 0.0,
            lean_rate: 0.0,
        }
    }

    pub fn xy(&self) -> Vector2<f64> {
        Vector2::from(self.root_xy)
    }

    pub fn forward(&self) -> Vector3<f64> {
        Vector3::new(self.heading.cos(), self.heading.sin(), 0.0)
    }

    pub fn left(&self) -> Vector3<f64> {
        Vector3::new(-self.heading.sin(), self.heading.cos(), 0.0)
    }
}

/// World positions and velocities of every part, in id order.
pub fn derive_parts(model: &AgentModel, state: &AgentState) -> Vec<BodyPartState> {
    let (f, l) = (state.forward(), state.left());
    let base = Vector3::new(state.root_xy[0], state.root_xy[1], 0.0);
    let v_root = Vector3::new(state.root_vel[0], state.root_vel[1], 0.0);
    model
        .parts
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let w = model.lean_weight(k);
            let side = p.offset[1] + state.lean * w;
            let position = base + f * p.offset[0] + l * side + Vector3::z() * (state.height_scale * p.offset[2]);
            // d(forward)/d(heading) = left, d(left)/d(heading) = -forward
            let velocity = v_root
                + (l * p.offset[0] - f * side) * state.heading_rate
                + l * (state.lean_rate * w)
                + Vector3::z() * (state.crouch_rate * p.offset[2]);
            BodyPartState { id: k, position, velocity, is_root: k == model.root_index, radius: p.radius }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_is_valid() {
        let m = AgentModel::default();
        m.validate().unwrap();
        assert_eq!(m.len(), 13);
        assert_eq!(m.upper_parts(), vec![0, 1, 2, 3, 4]);
        assert_eq!(m.lower_parts(), vec![9, 10, 11, 12]);
        assert_eq!(m.spine_parts(), vec![0, 1, 2, 3, 4, 5]);
        assert!((m.min_height_scale() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn identity_pose_uses_nominal_offsets() {
        let m = AgentModel::default();
        let s = AgentState::standing(Vector2::new(1.0, 2.0), Vector2::new(3.0, 2.0));
        let parts = derive_parts(&m, &s);
        for (p, spec) in parts.iter().zip(&m.parts) {
            let want = Vector3::new(1.0 + spec.offset[0], 2.0 + spec.offset[1], spec.offset[2]);
            assert!((p.position - want).norm() < 1e-12);
            assert_eq!(p.velocity, Vector3::zeros());
        }
        assert!(parts[6].is_root && parts.iter().filter(|p| p.is_root).count() == 1);
    }

    #[test]
    fn crouch_scales_heights() {
        let m = AgentModel::default();
        let mut s = AgentState::standing(Vector2::zeros(), Vector2::x());
        s.height_scale = 0.7;
        let parts = derive_parts(&m, &s);
        assert!((parts[0].position.z - 0.91).abs() < 1e-12);
        for (p, spec) in parts.iter().zip(&m.parts) {
            assert!((p.position.z - 0.7 * spec.offset[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn velocities_match_finite_differences() {
        let m = AgentModel::default();
        let s = AgentState {
            root_xy: [1.0, 1.5],
            heading: 0.4,
            height_scale: 0.85,
            lean: 0.05,
            root_vel: [0.3, -0.2],
            heading_rate: 0.7,
            crouch_rate: -0.2,
            lean_rate: 0.1,
        };
        let h = 1e-6;
        let mut s2 = s;
        s2.root_xy = [s.root_xy[0] + h * s.root_vel[0], s.root_xy[1] + h * s.root_vel[1]];
        s2.heading += h * s.heading_rate;
        s2.height_scale += h * s.crouch_rate;
        s2.lean += h * s.lean_rate;
        let (a, b) = (derive_parts(&m, &s), derive_parts(&m, &s2));
        for (pa, pb) in a.iter().zip(&b) {
            let fd = (pb.position - pa.position) / h;
            assert!((fd - pa.velocity).norm() < 1e-5, "{fd} vs {}", pa.velocity);
        }
    }

    #[test]
    fn lean_moves_only_the_upper_body() {
        let m = AgentModel::default();
        let mut s = AgentState::standing(Vector2::zeros(), Vector2::x());
        s.lean = 0.1;
        let parts = derive_parts(&m, &s);
        assert!((parts[0].position.y - 0.1).abs() < 1e-12);
        for k in 6..13 {
            assert!((parts[k].position.y - m.parts[k].offset[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = AgentModel::default();
        m.root_index = 20;
        assert!(m.validate().is_err());
        let mut m = AgentModel::default();
        m.parts[3].radius = 0.0;
        assert!(m.validate().is_err());
        let mut m = AgentModel::default();
        m.crouch_range = [1.0, 1.2];
        assert!(m.validate().is_err());
    }
}
