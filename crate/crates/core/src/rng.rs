//! Seeded Gaussian sampling.
//!
//! Uniforms come from ChaCha8 keyed directly by the 64-bit seed (the key is the
//! little-endian seed followed by zero bytes, so distinct seeds give distinct
//! keys). Each uniform uses the top 53 bits of one `u64` output. Normals are
//! produced in pairs by Box–Muller; the second value of a pair is cached.
//!
//! Trial `t` of a run seeded with `s` draws from the stream seeded with
//! [`trial_seed`]`(s, t)`, a bijective SplitMix64 mix of `s + γ (t + 1)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{OsRng, RngCore, SeedableRng};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the sub-stream used by trial `t`. Distinct `t` give distinct seeds.
pub fn trial_seed(seed: u64, t: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(t.wrapping_add(1))))
}

/// A seed from operating-system entropy.
pub fn entropy_seed() -> u64 {
    OsRng.next_u64()
}

/// Deterministic stream of uniforms and standard normals.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        Self {
            seed,
            counter: 0,
            rng: ChaCha8Rng::from_seed(key),
            spare: None,
        }
    }

    /// Independent stream for trial `t` of a run seeded with `seed`.
    pub fn for_trial(seed: u64, t: u64) -> Self {
        Self::new(trial_seed(seed, t))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of normal draws taken so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn gaussian(&mut self) -> f64 {
        self.counter += 1;
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn gaussian_vec<T: Real>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| T::lit(self.gaussian())).collect()
    }

    /// Uniform point on the unit sphere in `R^n`.
    pub fn unit_vector<T: Real>(&mut self, n: usize) -> Vec<T> {
        loop {
            let g: Vec<T> = self.gaussian_vec(n);
            let norm = crate::linalg::norm2(&g);
            if norm > T::zero() {
                return g.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

/// `rows x cols` matrix of independent standard normals, filled row by row.
pub fn sample_gaussian_matrix<T: Real>(
    stream: &mut RandomStream,
    rows: usize,
    cols: usize,
) -> Result<Matrix<T>> {
    if rows == 0 || cols == 0 {
        return invalid(format!("gaussian matrix needs positive dimensions, got {rows}x{cols}"));
    }
    Ok(Matrix::from_fn(rows, cols, |_, _| T::lit(stream.gaussian())))
}

/// GOE sample: symmetric, off-diagonal variance 1, diagonal variance 2.
/// The upper triangle (with diagonal) is filled row by row and mirrored.
pub fn sample_goe<T: Real>(stream: &mut RandomStream, d: usize) -> Result<Matrix<T>> {
    if d == 0 {
        return invalid("GOE dimension must be positive");
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut s = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let g = stream.gaussian();
            let x = if i == j { T::lit(sqrt2 * g) } else { T::lit(g) };
            s[(i, j)] = x;
            s[(j, i)] = x;
        }
    }
    Ok(s)
}
