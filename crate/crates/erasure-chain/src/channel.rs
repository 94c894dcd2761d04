//! BPSK over AWGN and log-likelihood-ratio computation.
//!
//! Bits map to antipodal symbols (bit 0 → +1, bit 1 → −1), noise is white
//! Gaussian with variance σ² derived from the configured Eb/N0 and the
//! overall concatenated rate, and the demodulator emits per-bit LLRs
//! (positive ⇒ bit 0 more likely). Everything is driven by caller-supplied
//! [`Rng`](crate::rng::Rng) substreams, so a frame's noise realization is a
//! pure function of the seed and frame index — identical across receiver
//! modes, which is what makes paired-mode comparisons legitimate.

use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Clamp for computed LLR magnitudes. Keeps channel observations well below
/// any pinning magnitude so a pinned entry is unambiguous.
pub const LLR_MAX: f64 = 50.0;

/// Which SNR normalization the `ebn0_db` knob uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SnrNorm {
    /// Energy per *information* bit: σ = √(1/(2·R·10^(x/10))).
    #[default]
    EbN0,
    /// Energy per channel symbol: the rate factor drops out.
    EsN0,
}

/// Channel configuration.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    /// SNR in dB, interpreted per `norm`.
    pub ebn0_db: f64,
    /// Overall rate R ∈ (0, 1]: information bits per channel bit, including
    /// every code and framing overhead in the chain.
    pub rate: f64,
    /// Base seed for substream derivation.
    pub seed: u64,
    pub norm: SnrNorm,
}

impl ChannelParams {
    /// Noise standard deviation for these parameters.
    pub fn sigma(&self) -> f64 {
        match self.norm {
            SnrNorm::EbN0 => sigma_for(self.ebn0_db, self.rate),
            SnrNorm::EsN0 => sigma_for(self.ebn0_db, 1.0),
        }
    }
}

/// σ = √(1 / (2·R·10^(ebn0_db/10))), unit signal energy.
pub fn sigma_for(ebn0_db: f64, rate: f64) -> f64 {
    assert!(rate > 0.0 && rate <= 1.0, "rate must be in (0, 1]");
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    (1.0 / (2.0 * rate * ebn0)).sqrt()
}

/// BPSK-modulates `bits` and adds N(0, σ²) noise. Gaussians are always
/// drawn (one per bit) so the stream consumption is independent of σ; at
/// σ = 0 the samples are exactly ±1.
pub fn transmit(bits: &[u8], sigma: f64, rng: &mut Rng) -> Vec<f64> {
    bits.iter()
        .map(|&b| {
            let signal = 1.0 - 2.0 * b as f64;
            signal + sigma * rng.next_gaussian()
        })
        .collect()
}

/// Per-sample LLR 2y/σ², clamped to ±[`LLR_MAX`].
pub fn llr(samples: &[f64], sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "llr needs positive sigma");
    let scale = 2.0 / (sigma * sigma);
    samples.iter().map(|&y| (scale * y).clamp(-LLR_MAX, LLR_MAX)).collect()
}

/// Complementary error function, Numerical-Recipes-style Chebyshev fit;
/// relative error below 1.2e-7 everywhere. Plenty for Monte Carlo oracles.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t * (-z * z - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Theoretical uncoded BPSK bit-error rate at a given Eb/N0 (dB):
/// Q(√(2·Eb/N0)).
pub fn uncoded_ber(ebn0_db: f64) -> f64 {
    q_func((2.0 * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_matches_worked_example() {
        // R = 0.5·(223/255), 2 dB: 2·R·10^0.2 = 1.38601…, σ = 0.84941…
        let rate: f64 = 0.5 * 223.0 / 255.0;
        assert!((rate - 0.43725).abs() < 1e-5);
        let sigma = sigma_for(2.0, rate);
        assert!((sigma - 0.8494).abs() < 1e-4, "sigma = {sigma}");
    }

    #[test]
    fn esn0_normalization_drops_rate() {
        let p = ChannelParams { ebn0_db: 3.0, rate: 0.4372, seed: 0, norm: SnrNorm::EsN0 };
        assert_eq!(p.sigma(), sigma_for(3.0, 1.0));
    }

    #[test]
    fn zero_sigma_gives_exact_antipodal_samples() {
        let mut rng = Rng::seeded(1);
        let samples = transmit(&[0, 1, 1, 0], 0.0, &mut rng);
        assert_eq!(samples, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn identical_seed_identical_stream() {
        let bits = vec![0u8; 1000];
        let a = transmit(&bits, 0.7, &mut Rng::seeded(9));
        let b = transmit(&bits, 0.7, &mut Rng::seeded(9));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_mean_converges_to_signal() {
        let n = 1_000_000usize;
        let sigma = 0.9f64;
        let mut rng = Rng::seeded(10);
        let samples = transmit(&vec![0u8; n], sigma, &mut rng);
        let mean = samples.iter().sum::<f64>() / n as f64;
        // standard-error band: 5σ/√n with n = 10⁶.
        assert!((mean - 1.0).abs() < 5.0 * sigma / 1e3, "mean {mean}");
    }

    #[test]
    fn llr_formula_and_clamp() {
        assert_eq!(llr(&[0.0], 1.0), vec![0.0]);
        assert_eq!(llr(&[1.0], 1.0), vec![2.0]);
        // 2·30/0.25 = 240 clamps to 50.
        assert_eq!(llr(&[30.0, -30.0], 0.5), vec![LLR_MAX, -LLR_MAX]);
    }

    #[test]
    fn erfc_reference_values() {
        // Abramowitz & Stegun table values.
        for (x, want) in [(0.0, 1.0), (0.5, 0.4795001), (1.0, 0.1572992), (2.0, 0.0046777)] {
            assert!((erfc(x) - want).abs() < 1e-6, "erfc({x}) = {}", erfc(x));
        }
        assert!((erfc(-1.0) - (2.0 - 0.1572992)).abs() < 1e-6);
    }

    #[test]
    fn uncoded_ber_at_4db_is_one_and_a_quarter_percent() {
        let ber = uncoded_ber(4.0);
        assert!((ber - 1.25e-2).abs() < 2e-4, "Q(√(2·10^0.4)) = {ber}");
    }

    #[test]
    fn hard_decision_ber_tracks_q_function() {
        // Uncoded (R = 1) hard decisions at three SNRs over 10⁶ bits each;
        // Monte Carlo must sit within 10% of the Q-function value.
        for (i, ebn0_db) in [2.0, 4.0, 6.0].into_iter().enumerate() {
            let sigma = sigma_for(ebn0_db, 1.0);
            let n = 1_000_000usize;
            let mut rng = Rng::substream(0x0b3e, 7, i as u64);
            let bits = vec![0u8; n];
            let samples = transmit(&bits, sigma, &mut rng);
            let values = llr(&samples, sigma);
            let errors = values.iter().filter(|&&v| v < 0.0).count();
            let ber = errors as f64 / n as f64;
            let theory = uncoded_ber(ebn0_db);
            assert!(
                (ber - theory).abs() / theory < 0.10,
                "{ebn0_db} dB: MC {ber} vs theory {theory}"
            );
        }
    }
}
