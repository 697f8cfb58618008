//! Shared deterministic-generation helpers for the benchmark inputs.
//!
//! Everything here is a pure function of `(seed, stream)`: the same seed
//! always produces the same bytes, and independent parts of one generator
//! draw from distinct streams so adding draws to one part never perturbs
//! another.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Zipf-distributed rank sampler over `1..=n` with exponent `s`:
/// P(rank r) ∝ 1/r^s. Sampling is a binary search over the precomputed
/// CDF, so construction is O(n) and each draw O(log n).
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize, s: f64) -> Self {
        assert!(n >= 1);
        let mut cdf = Vec::with_capacity(n);
        let mut total = 0.0;
        for r in 1..=n {
            total += 1.0 / (r as f64).powf(s);
            cdf.push(total);
        }
        for c in &mut cdf {
            *c /= total;
        }
        Zipf { cdf }
    }

    /// Draw a 0-based rank (0 = most frequent).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1)
    }
}

/// Lowercase word for a vocabulary index: the index in base 26, padded to
/// at least 3 letters. Injective, so distinct indices are distinct words.
pub fn vocab_word(index: usize) -> String {
    let mut digits = Vec::new();
    let mut i = index;
    loop {
        digits.push(b'a' + (i % 26) as u8);
        i /= 26;
        if i == 0 {
            break;
        }
    }
    while digits.len() < 3 {
        digits.push(b'a');
    }
    digits.reverse();
    String::from_utf8(digits).expect("ascii letters")
}

/// A random lowercase ASCII word of exactly `len` letters.
pub fn random_word<R: Rng>(rng: &mut R, len: usize) -> String {
    let letters = Uniform::new_inclusive(b'a', b'z');
    (0..len).map(|_| letters.sample(rng) as char).collect()
}
