//! Procedural obstacle synthesis with a difficulty knob.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{stream, uniform_rotation, Purpose};
use crate::voxel::{Anchor, OrientedBox};

/// Value ranges interpolated linearly between difficulty 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSchedule {
    pub n_min: u32,
    pub n_max: u32,
    /// Gap between paired side obstacles, metres.
    pub passage_easy: [f64; 2],
    pub passage_hard: [f64; 2],
    /// Free height below hanging and floating obstacles, metres.
    pub overhead_easy: [f64; 2],
    pub overhead_hard: [f64; 2],
    /// Top height of floor obstacles, metres.
    pub hurdle_easy: [f64; 2],
    pub hurdle_hard: [f64; 2],
    /// Obstacles stay this far from the room walls (centre placement).
    pub wall_margin: f64,
}

impl Default for BoxSchedule {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 14,
            passage_easy: [0.9, 1.4],
            passage_hard: [0.45, 0.8],
            overhead_easy: [1.6, 1.9],
            overhead_hard: [1.1, 1.4],
            hurdle_easy: [0.05, 0.15],
            hurdle_hard: [0.2, 0.4],
            wall_margin: 0.3,
        }
    }
}

fn lerp_range(easy: [f64; 2], hard: [f64; 2], d: f64) -> [f64; 2] {
    [easy[0] + d * (hard[0] - easy[0]), easy[1] + d * (hard[1] - easy[1])]
}

fn draw(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

impl BoxSchedule {
    pub fn count(&self, difficulty: f64) -> usize {
        (self.n_min as f64 + difficulty * (self.n_max as f64 - self.n_min as f64)).round() as usize
    }

    pub fn passage(&self, d: f64) -> [f64; 2] {
        lerp_range(self.passage_easy, self.passage_hard, d)
    }

    pub fn overhead(&self, d: f64) -> [f64; 2] {
        lerp_range(self.overhead_easy, self.overhead_hard, d)
    }

    pub fn hurdle(&self, d: f64) -> [f64; 2] {
        lerp_range(self.hurdle_easy, self.hurdle_hard, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Low floor obstacle to step over.
    Hurdle,
    /// Tall floor-to-ceiling obstacle.
    Post,
    /// Two posts with a passage between them.
    Pair,
    /// Ceiling obstacle to duck under.
    Overhead,
    /// Floating obstacle with free space above and below.
    Mid,
}

const KINDS: [Kind; 5] = [Kind::Hurdle, Kind::Post, Kind::Pair, Kind::Overhead, Kind::Mid];

/// Vertical half-size of the world bounding box of a rotated box.
fn aabb_half_z(r: &Matrix3<f64>, h: &Vector3<f64>) -> f64 {
    (0..3).map(|i| r[(2, i)].abs() * h[i]).sum()
}

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    room: [f64; 3],
    difficulty: f64,
    schedule: &'a BoxSchedule,
    scale: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn xy(&mut self) -> (f64, f64) {
        let m = self.schedule.wall_margin;
        let x = self.rng.random_range(m..(self.room[0] - m).max(m + 1e-9));
        let y = self.rng.random_range(m..(self.room[1] - m).max(m + 1e-9));
        (x, y)
    }

    fn hurdle(&mut self) -> OrientedBox {
        let top = draw(self.rng, self.schedule.hurdle(self.difficulty));
        let mut h = Vector3::new(
            self.rng.random_range(0.3..0.8) * self.scale,
            self.rng.random_range(0.05..0.15) * self.scale,
            self.rng.random_range(0.1..0.3),
        );
        let r = uniform_rotation(self.rng);
        // the box must reach down through the floor
        let hz = aabb_half_z(&r, &h);
        if 2.0 * hz < top {
            h *= top / (2.0 * hz);
        }
        let hz = aabb_half_z(&r, &h);
        let (x, y) = self.xy();
        OrientedBox::new(Vector3::new(x, y, top - hz), h, r, Anchor::Floor)
    }

    /// A box whose most vertical axis is stretched to span the room height.
    fn post_shape(&mut self) -> (Matrix3<f64>, Vector3<f64>, usize) {
        let r = uniform_rotation(self.rng);
        let long = (0..3).max_by(|&a, &b| r[(2, a)].abs().total_cmp(&r[(2, b)].abs())).unwrap();
        let mut h = Vector3::new(
            self.rng.random_range(0.1..0.3) * self.scale,
            self.rng.random_range(0.1..0.3) * self.scale,
            self.rng.random_range(0.1..0.3) * self.scale,
        );
        h[long] = (0.5 * self.room[2] + 0.3) / r[(2, long)].abs();
        (r, h, long)
    }

    fn post(&mut self) -> OrientedBox {
        let (r, h, _) = self.post_shape();
        let (x, y) = self.xy();
        OrientedBox::new(Vector3::new(x, y, 0.5 * self.room[2]), h, r, Anchor::Floor)
    }

    fn pair(&mut self) -> [OrientedBox; 2] {
        let gap = draw(self.rng, self.schedule.passage(self.difficulty));
        let (r, h, long) = self.post_shape();
        // separate along the less vertical of the two short axes
        let side = (0..3)
            .filter(|&a| a != long)
            .min_by(|&a, &b| r[(2, a)].abs().total_cmp(&r[(2, b)].abs()))
            .unwrap();
        let normal = r.column(side).into_owned();
        let (x, y) = self.xy();
        let mid = Vector3::new(x, y, 0.5 * self.room[2]);
        let offset = normal * (h[side] + 0.5 * gap);
        [
            OrientedBox::new(mid - offset, h, r, Anchor::Floor),
            OrientedBox::new(mid + offset, h, r, Anchor::Floor),
        ]
    }

    fn overhead(&mut self) -> OrientedBox {
        let clearance = draw(self.rng, self.schedule.overhead(self.difficulty));
        let mut h = Vector3::new(
            self.rng.random_range(0.4..1.0) * self.scale,
            self.rng.random_range(0.1..0.4) * self.scale,
            self.rng.random_range(0.1..0.3),
        );
        let r = uniform_rotation(self.rng);
        let need = self.room[2] - clearance;
        let hz = aabb_half_z(&r, &h);
        if 2.0 * hz < need {
            h *= need / (2.0 * hz);
        }
        let hz = aabb_half_z(&r, &h);
        let (x, y) = self.xy();
        OrientedBox::new(Vector3::new(x, y, clearance + hz), h, r, Anchor::Ceiling)
    }

    fn mid(&mut self) -> OrientedBox {
        let clearance = draw(self.rng, self.schedule.overhead(self.difficulty));
        let h = Vector3::new(
            self.rng.random_range(0.2..0.5) * self.scale,
            self.rng.random_range(0.1..0.3) * self.scale,
            self.rng.random_range(0.05..0.15),
        );
        let r = uniform_rotation(self.rng);
        let hz = aabb_half_z(&r, &h);
        let (x, y) = self.xy();
        OrientedBox::new(Vector3::new(x, y, clearance + hz), h, r, Anchor::Mid)
    }
}

/// Obstacles for attempt `attempt` of scene `seed`.
pub fn generate_boxes_attempt(
    seed: u64,
    attempt: u32,
    difficulty: f64,
    room: [f64; 3],
    schedule: &BoxSchedule,
) -> Vec<OrientedBox> {
    let mut rng = stream(seed, Purpose::Boxes, attempt);
    let difficulty = difficulty.clamp(0.0, 1.0);
    let n = schedule.count(difficulty);
    let mut b = Builder { rng: &mut rng, room, difficulty, schedule, scale: 1.0 + 0.5 * difficulty };
    let mut out: Vec<OrientedBox> = Vec::with_capacity(n + 1);
    // harder scenes always combine floor, ceiling, and side constraints
    let mut forced: Vec<Kind> = if difficulty >= 0.5 { vec![Kind::Hurdle, Kind::Overhead, Kind::Pair] } else { vec![] };
    forced.reverse();
    while out.len() < n {
        let kind = forced.pop().unwrap_or_else(|| KINDS[b.rng.random_range(0..KINDS.len())]);
        match kind {
            Kind::Hurdle => out.push(b.hurdle()),
            Kind::Post => out.push(b.post()),
            Kind::Overhead => out.push(b.overhead()),
            Kind::Mid => out.push(b.mid()),
            Kind::Pair if out.len() + 2 <= n => out.extend(b.pair()),
            Kind::Pair => out.push(b.post()),
        }
    }
    out
}

pub fn generate_boxes(seed: u64, difficulty: f64, room: [f64; 3]) -> Vec<OrientedBox> {
    generate_boxes_attempt(seed, 0, difficulty, room, &BoxSchedule::default())
}
