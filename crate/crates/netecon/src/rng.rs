//! Deterministic pseudo-random streams.
//!
//! Every random quantity in a simulation is drawn from a named stream derived
//! from one of the two run seeds. A stream's state is a pure function of
//! `(seed, name)`, so draw sequences are reproducible bit-for-bit across runs
//! regardless of how other streams are consumed.
//!
//! The generator is SplitMix64: `state` advances by a fixed odd increment and
//! each output is a finalizing scramble of the state. Stream derivation hashes
//! the stream name with FNV-1a, XORs it into the seed, and takes one SplitMix64
//! output as the derived state.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// FNV-1a over a byte string; used only to map stream names to 64-bit tags.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A named draw stream with convenience samplers.
#[derive(Debug, Clone)]
pub struct Stream {
    gen: SplitMix64,
    spare_normal: Option<f64>,
}

impl Stream {
    /// Derive the stream for `name` from `seed`. Pure in `(seed, name)`.
    pub fn derive(seed: u64, name: &str) -> Self {
        let mut mix = SplitMix64::new(seed ^ fnv1a64(name.as_bytes()));
        Self {
            gen: SplitMix64::new(mix.next_u64()),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.gen.next_u64()
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn u01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.u01()
    }

    /// Uniform f64 in (0, hi): rejects exact zeros so the result is positive.
    pub fn uniform_positive(&mut self, hi: f64) -> f64 {
        loop {
            let x = self.uniform(0.0, hi);
            if x > 0.0 {
                return x;
            }
        }
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Uniform integer in [lo, hi].
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// True with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.u01() < p
    }

    /// Normal(mean, sd) via the Marsaglia polar method.
    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return mean + sd * z;
        }
        loop {
            let u = 2.0 * self.u01() - 1.0;
            let v = 2.0 * self.u01() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * f);
                return mean + sd * (u * f);
            }
        }
    }

    /// |Normal(mean, sd)|, resampled in the measure-zero event of an exact 0.
    pub fn abs_normal_positive(&mut self, mean: f64, sd: f64) -> f64 {
        loop {
            let x = self.normal(mean, sd).abs();
            if x > 0.0 {
                return x;
            }
        }
    }

    /// `k` distinct indices drawn uniformly from [0, n) by partial Fisher-Yates.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// The named streams used by one simulation run.
///
/// `s1` governs prices, returns to scale, and shareholding; `s2` governs the
/// trade graph and all elasticities, including the draws the engine consumes
/// when rewiring demanders or regenerating a consumer.
#[derive(Debug, Clone)]
pub struct SeedStreams {
    pub s1: u64,
    pub s2: u64,
    pub prices: Stream,
    pub kappa: Stream,
    pub shareholders: Stream,
    pub elasticities: Stream,
    pub providers: Stream,
    pub rewire: Stream,
    pub regen: Stream,
}

/// Stream names, public so tests can re-derive any stream.
pub const S1_STREAMS: [&str; 3] = ["prices", "kappa", "shareholders"];
pub const S2_STREAMS: [&str; 4] = ["elasticities", "providers", "rewire", "regen"];

pub fn derive_streams(s1: u64, s2: u64) -> SeedStreams {
    SeedStreams {
        s1,
        s2,
        prices: Stream::derive(s1, "prices"),
        kappa: Stream::derive(s1, "kappa"),
        shareholders: Stream::derive(s1, "shareholders"),
        elasticities: Stream::derive(s2, "elasticities"),
        providers: Stream::derive(s2, "providers"),
        rewire: Stream::derive(s2, "rewire"),
        regen: Stream::derive(s2, "regen"),
    }
}
