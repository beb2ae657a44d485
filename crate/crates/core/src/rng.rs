//! Keyed, splittable random streams.
//!
//! A stream is identified by a root seed and a path of integer labels. The
//! generator state is seeded from a hash of the whole path, so a child stream
//! depends only on *which* labels were used, never on how many draws the parent
//! or its siblings have made. Work items keyed as `(replicate, lambda, b)` are
//! therefore reproducible under any scheduling.

use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn child_key(parent: u64, label: u64) -> u64 {
    mix64(parent.rotate_left(17) ^ mix64(label.wrapping_add(GOLDEN)).wrapping_mul(GOLDEN))
}

/// A deterministic random stream addressed by `(seed, path)`.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    path: Vec<u64>,
    key: u64,
    rng: Xoshiro256PlusPlus,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let key = mix64(seed ^ GOLDEN);
        Self {
            seed,
            path: Vec::new(),
            key,
            rng: Xoshiro256PlusPlus::seed_from_u64(key),
        }
    }

    /// Child stream for `label`. Pure in `(self.seed, self.path, label)`;
    /// draws already taken from `self` have no effect.
    pub fn derive(&self, label: u64) -> Self {
        let key = child_key(self.key, label);
        let mut path = self.path.clone();
        path.push(label);
        Self {
            seed: self.seed,
            path,
            key,
            rng: Xoshiro256PlusPlus::seed_from_u64(key),
        }
    }

    /// Shorthand for a chain of [`derive`](Self::derive) calls.
    pub fn derive_path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(self.clone(), |s, &l| s.derive(l))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-and-reject, unbiased).
    #[inline]
    pub fn uniform_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let range = n as u64;
        let mut m = (self.next_u64() as u128) * (range as u128);
        let mut low = m as u64;
        if low < range {
            let threshold = range.wrapping_neg() % range;
            while low < threshold {
                m = (self.next_u64() as u128) * (range as u128);
                low = m as u64;
            }
        }
        (m >> 64) as usize
    }
}

impl RngCore for RandomStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(s: &mut RandomStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| s.next_f64()).collect()
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / libm::sqrt(saa * sbb)
    }

    #[test]
    fn derive_is_deterministic() {
        let root = RandomStream::new(42);
        let mut a = root.derive(1);
        let mut b = root.derive(1);
        assert_eq!(draws(&mut a, 100), draws(&mut b, 100));
        assert_eq!(a.path(), &[1]);
    }

    #[test]
    fn derive_ignores_parent_consumption() {
        let mut root = RandomStream::new(7);
        let before = draws(&mut root.derive(3), 10);
        let _ = draws(&mut root, 1000);
        assert_eq!(before, draws(&mut root.derive(3), 10));
    }

    #[test]
    fn siblings_are_uncorrelated() {
        let root = RandomStream::new(2024);
        let a = draws(&mut root.derive(1), 10_000);
        let b = draws(&mut root.derive(2), 10_000);
        assert!(correlation(&a, &b).abs() < 0.05);
    }

    #[test]
    fn derivation_order_matters() {
        let root = RandomStream::new(5);
        let a = draws(&mut root.derive(1).derive(2), 50);
        let b = draws(&mut root.derive(2).derive(1), 50);
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_index_in_range_and_covers() {
        let mut s = RandomStream::new(1);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[s.uniform_index(7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }
}
