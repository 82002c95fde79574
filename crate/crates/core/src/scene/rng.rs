//! Keyed random streams.
//!
//! Every consumer draws from its own ChaCha8 stream selected by
//! `(seed, purpose, index)`, so adding draws to one consumer never shifts
//! another consumer's numbers.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Boxes = 1,
    Perlin = 2,
    StartGoal = 3,
    Trial = 4,
}

/// Stream for `(seed, purpose, index)`. `index` distinguishes attempts,
/// boxes, or trials within one purpose.
pub fn stream(seed: u64, purpose: Purpose, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 32) | index as u64);
    rng
}

/// Uniformly distributed rotation from three uniform draws (Shoemake's
/// subgroup construction of a uniform unit quaternion).
pub fn uniform_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(b * (tau * u3).cos(), a * (tau * u2).sin(), a * (tau * u2).cos(), b * (tau * u3).sin());
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}
