//! Portable pseudo-random generator used by every stochastic step.
//!
//! The generator is xorshift64* (Marsaglia xorshift with a multiplicative
//! output scrambler). With state `x` (never zero) one step is
//!
//! ```text
//! x ^= x >> 12
//! x ^= x << 25
//! x ^= x >> 27
//! out = x * 0x2545_F491_4F6C_DD1D   (mod 2^64)
//! ```
//!
//! Seeds are expanded through one SplitMix64 step
//!
//! ```text
//! z = seed + 0x9E37_79B9_7F4A_7C15
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//! z = z ^ (z >> 31)
//! ```
//!
//! and a zero result is replaced by the SplitMix increment. All arithmetic is
//! wrapping 64-bit, so streams are identical on every platform.

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_MULT: u64 = 0x2545_F491_4F6C_DD1D;

pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { SPLITMIX_GAMMA } else { s },
        }
    }

    /// Independent stream for item `index` of a run seeded with `seed`.
    ///
    /// Used to give each augmented variant its own generator so that
    /// parallel and serial execution draw the same numbers.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(seed ^ splitmix64(index.wrapping_mul(SPLITMIX_GAMMA) ^ 0xD1B5_4A32_D192_ED03))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_MULT)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One Bernoulli draw. Always consumes exactly one number from the stream.
    pub fn chance(&mut self, p: f64) -> bool {
        let u = self.next_f64();
        u < p
    }

    /// Uniform integer in `[0, n)`; `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        // reject the biased tail so every residue is equally likely
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // first outputs of the reference SplitMix64 stream seeded with 0
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(SPLITMIX_GAMMA), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Xorshift64Star::new(42);
        let mut b = Xorshift64Star::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(Xorshift64Star::new(1).next_u64(), Xorshift64Star::new(2).next_u64());
    }

    #[test]
    fn derived_streams_differ() {
        let a = Xorshift64Star::derive(7, 0).next_u64();
        let b = Xorshift64Star::derive(7, 1).next_u64();
        assert_ne!(a, b);
        assert_eq!(a, Xorshift64Star::derive(7, 0).next_u64());
    }

    #[test]
    fn unit_interval_and_below() {
        let mut r = Xorshift64Star::new(9);
        let mut hist = [0usize; 5];
        for _ in 0..50_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            hist[r.below(5)] += 1;
        }
        for h in hist {
            assert!((9_000..11_000).contains(&h), "{hist:?}");
        }
    }

    #[test]
    fn chance_extremes() {
        let mut r = Xorshift64Star::new(3);
        assert!((0..1000).all(|_| !r.chance(0.0)));
        assert!((0..1000).all(|_| r.chance(1.0)));
    }
}
