//! Seedable pseudo-random number generation with splittable substreams.
//!
//! Everything stochastic in this crate — channel noise, payload synthesis,
//! corruption masks, weight initialization, batch shuffling — draws from this
//! one generator so that every artifact is bit-reproducible from a `u64`
//! seed. The core is xoshiro256++ (Blackman & Vigna), seeded through a
//! splitmix64 expansion as its authors recommend; Gaussians come from the
//! polar-free Box-Muller transform.
//!
//! Substreams: simulations want one logical stream per frame so that frames
//! can be generated in parallel and so that frame `i` sees identical noise
//! regardless of which receiver mode or SNR point is being evaluated.
//! [`Rng::substream`] derives an independent generator from `(seed, label,
//! index)` without consuming state from any other stream.

/// splitmix64 step: advances `state` and returns the next output word.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator. Cheap to clone; `Copy` is deliberately not
/// derived so accidental stream forks show up in review.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    /// Builds a generator from a 64-bit seed via splitmix64 expansion.
    pub fn seeded(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    /// Derives an independent substream from `(seed, label, index)`.
    ///
    /// `label` separates the different stochastic roles in one run (noise,
    /// payload content, corruption, ...) and `index` is typically a frame
    /// number. The triple is folded through splitmix64 before expansion, so
    /// related indices do not produce related streams.
    pub fn substream(seed: u64, label: u64, index: u64) -> Self {
        let mut sm = seed;
        let a = splitmix64(&mut sm);
        let mut sm2 = a ^ label.wrapping_mul(0xA24B_AED4_963E_E407);
        let b = splitmix64(&mut sm2);
        let mut sm3 = b ^ index.wrapping_mul(0x9FB2_1C65_1E98_DF25);
        Rng::seeded(splitmix64(&mut sm3))
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, bound)`. Uses 128-bit multiply-shift reduction, which
    /// has negligible bias for the bounds used here (≤ 2^32).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform byte.
    pub fn next_byte(&mut self) -> u8 {
        (self.next_u64() >> 56) as u8
    }

    /// Standard normal via Box-Muller. Draws exactly two uniforms per call;
    /// the cosine branch is used and the sine branch discarded, trading half
    /// the entropy for a stateless (and thus simply reproducible) mapping.
    pub fn next_gaussian(&mut self) -> f64 {
        // next_f64 is in [0,1); flip to (0,1] so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Fixed substream labels, one per independent stochastic role.
///
/// Centralizing the labels guarantees that two consumers never collide.
/// Channel noise for frame `i` is keyed by `(seed, CHANNEL_NOISE, i)` alone,
/// so the identical noise realization is replayed no matter which receiver
/// mode or operating point is under evaluation — paired comparisons between
/// modes then share common random numbers.
pub mod labels {
    /// Clean payload synthesis (one stream per frame).
    pub const FRAME_CONTENT: u64 = 1;
    /// Per-byte substitution corruption of training examples (one per frame).
    pub const CORRUPTION: u64 = 2;
    /// Additive channel noise (one per frame, shared across modes and SNRs).
    pub const CHANNEL_NOISE: u64 = 3;
    /// Weight initialization and batch shuffling during training.
    pub const TRAINING: u64 = 4;
}
