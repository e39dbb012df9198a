use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seedable deterministic random stream.
///
/// A stream is identified by a base seed plus a label, hashed together into
/// the generator seed, so independent components (initialization, data
/// sampling, shuffling) draw from non-overlapping streams that do not shift
/// when an unrelated component consumes more randomness.
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: &str) -> StreamRng {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(stream.as_bytes());
        let digest: [u8; 32] = hasher.finalize().into();
        StreamRng { rng: ChaCha8Rng::from_seed(digest) }
    }

    /// Uniform draw from [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Uniform integer in [0, n) for wide counts.
    pub fn below_u128(&mut self, n: u128) -> u128 {
        self.rng.gen_range(0..n)
    }

    /// Standard normal scaled by `std` (Box-Muller).
    pub fn normal(&mut self, std: f64) -> f64 {
        let u1: f64 = 1.0 - self.rng.gen::<f64>(); // (0, 1], keeps ln finite
        let u2: f64 = self.rng.gen();
        std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill_normal(&mut self, values: &mut [f64], std: f64) {
        for v in values {
            *v = self.normal(std);
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            items.swap(i, j);
        }
    }
}
