//! Classic 2D gradient noise with fractal octaves.

use rand::seq::SliceRandom;

use super::rng::{stream, Purpose};

/// Eight unit gradient directions.
const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

const PERSISTENCE: f64 = 0.5;
const LACUNARITY: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct Perlin2 {
    perm: [u8; 512],
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

impl Perlin2 {
    /// Noise table for `(seed, index)`; distinct indices give unrelated noise.
    pub fn new(seed: u64, index: u32) -> Self {
        let mut table: Vec<u8> = (0..=255).collect();
        table.shuffle(&mut stream(seed, Purpose::Perlin, index));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        Self { perm }
    }

    fn grad(&self, ix: i64, iy: i64) -> (f64, f64) {
        let x = ix.rem_euclid(256) as usize;
        let y = iy.rem_euclid(256) as usize;
        let h = self.perm[self.perm[x] as usize + y];
        GRADIENTS[(h & 7) as usize]
    }

    /// Single octave on a unit lattice, scaled to `[-1, 1]`.
    pub fn noise(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let dot = |dx: i64, dy: i64| {
            let (gx, gy) = self.grad(ix + dx, iy + dy);
            gx * (fx - dx as f64) + gy * (fy - dy as f64)
        };
        let (u, v) = (fade(fx), fade(fy));
        let n = lerp(lerp(dot(0, 0), dot(1, 0), u), lerp(dot(0, 1), dot(1, 1), u), v);
        // unit gradients bound the raw value by sqrt(1/2)
        (n * std::f64::consts::SQRT_2).clamp(-1.0, 1.0)
    }

    /// Fractal sum of `octaves` octaves, normalized to stay in `[-1, 1]`.
    pub fn fbm(&self, x: f64, y: f64, cell_size: f64, octaves: u32) -> f64 {
        let mut sum = 0.0;
        let mut norm = 0.0;
        let mut amp = 1.0;
        let mut freq = 1.0 / cell_size;
        for o in 0..octaves.max(1) {
            // shift higher octaves off the base lattice
            let shift = o as f64 * 0.371;
            sum += amp * self.noise(x * freq + shift, y * freq + shift);
            norm += amp;
            amp *= PERSISTENCE;
            freq *= LACUNARITY;
        }
        sum / norm
    }
}

/// One-shot noise query. Builds the table each call; reuse a [`Perlin2`]
/// for many queries.
pub fn perlin2(x: f64, y: f64, seed: u64, cell_size: f64, octaves: u32) -> f64 {
    Perlin2::new(seed, 0).fbm(x, y, cell_size, octaves)
}
