//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator whose 64-bit seed is derived from
//! `(master_seed, replication_id)` with the splitmix64 finalizer:
//!
//! ```text
//! seed = splitmix64(master_seed ^ splitmix64(replication_id + 0x9E3779B97F4A7C15))
//! ```
//!
//! Streams therefore do not depend on the order in which replications run.
//! Standard normals use the Marsaglia polar method on 53-bit uniforms, with
//! `libm` for `log`, so a seed yields the same samples on every platform.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for one replication.
pub fn derive_seed(master_seed: u64, replication_id: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(replication_id.wrapping_add(GOLDEN_GAMMA)))
}

/// Tags for independent sub-streams within one replication.
pub mod purpose {
    pub const DATA: u64 = 1;
    pub const SUPPORT: u64 = 2;
    pub const DESCENT: u64 = 3;
}

/// A deterministic stream of uniforms and standard normals.
#[derive(Clone, Debug)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn for_replication(master_seed: u64, replication_id: u64) -> Self {
        Self::from_seed(derive_seed(master_seed, replication_id))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = libm::sqrt(-2.0 * libm::log(s) / s);
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Uniform integer in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
