//! Minimal deterministic generator for seeding searches and fuzz
//! corpora. A fixed linear congruential step (Knuth's MMIX constants)
//! keeps every run byte-reproducible across platforms without pulling
//! in an external RNG crate.

#[derive(Clone, Copy, Debug)]
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        // One warm-up step so nearby seeds decorrelate immediately.
        let mut rng = Lcg(seed);
        rng.step();
        rng
    }

    /// Independent stream for item `k`, so work can be reordered or
    /// parallelized without changing any draw.
    pub fn fork(&self, k: u64) -> Self {
        Lcg::new(self.0 ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn step(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform draw in `[0, 1)` with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.step() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let mut a = Lcg::new(42);
        let mut b = Lcg::new(42);
        for _ in 0..1000 {
            let x = a.next_f64();
            assert_eq!(x, b.next_f64());
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn forked_streams_differ() {
        let root = Lcg::new(42);
        let mut x = root.fork(1);
        let mut y = root.fork(2);
        assert_ne!(x.next_f64(), y.next_f64());
    }
}
