//! Counter-based random numbers: output i is a pure function of (seed, i), so
//! parallel consumers can draw from arbitrary stream positions without
//! coordination and results never depend on scheduling.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Derive an independent stream seed from a master seed and a salt
    /// (e.g. a config digest), so concurrent verifications do not share draws.
    pub fn derive(master: u64, salt: u64) -> u64 {
        splitmix64(master ^ splitmix64(salt))
    }

    #[inline]
    pub fn bits(&self, position: u64) -> u64 {
        splitmix64(self.seed ^ position.wrapping_mul(GOLDEN).wrapping_add(0x2545_f491_4f6c_dd1d))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, position: u64) -> f64 {
        (((self.bits(position) >> 11) as f64) + 0.5) * (1.0 / 9007199254740992.0)
    }

    /// Standard normal via the inverse CDF.
    #[inline]
    pub fn normal(&self, position: u64) -> f64 {
        crate::special::norm_quantile(self.uniform(position))
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform_in(&self, position: u64, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform(position)
    }
}
