//! Counter-based deterministic random number generator.
//!
//! Every draw is a pure function of `(seed, counter)`, so a stream can be
//! reproduced from its state alone and disjoint streams can be handed to
//! parallel workers by [`RngState::split`]. There is no global state.

/// Explicit generator state. Identical state produces an identical stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    seed: u64,
    counter: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Finalizer from the splitmix64 generator; bijective on u64.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self
            .seed
            .wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from the open interval `(0, 1)`; never returns an
    /// endpoint, so it is safe to feed through inverse CDFs.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Derive an independent child stream and advance this one. The child
    /// seed mixes the parent seed with the split position, so repeated
    /// splits yield pairwise-distinct streams.
    pub fn split(&mut self) -> RngState {
        let tag = self.next_u64();
        RngState {
            seed: mix(self.seed ^ tag ^ 0x5851_f42d_4c95_7f2d),
            counter: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_state_identical_stream() {
        let mut a = RngState::new(7);
        let mut b = RngState::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a, b);
    }

    #[test]
    fn unit_interval_bounds() {
        let mut rng = RngState::new(42);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
            let v = rng.next_open01();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn split_streams_disagree() {
        let mut parent = RngState::new(3);
        let mut a = parent.split();
        let mut b = parent.split();
        let mut same = 0;
        for _ in 0..64 {
            if a.next_u64() == b.next_u64() {
                same += 1;
            }
        }
        assert_eq!(same, 0);
    }

    #[test]
    fn mean_of_uniforms_is_centered() {
        let mut rng = RngState::new(11);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| rng.next_f64()).sum();
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
    }
}
