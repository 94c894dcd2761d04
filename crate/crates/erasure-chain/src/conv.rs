//! Rate-1/2 convolutional code: encoder and soft-input Viterbi decoder with
//! bit pinning.
//!
//! The code is the deep-space workhorse — constraint length K = 7,
//! generators 171/133 octal read MSB-first (the mask's top bit taps the
//! current input bit), zero-state termination via K−1 flush bits. The
//! decoder maximizes the correlation metric Σ llr·(1 − 2·bit) over the
//! 64-state trellis in double precision, full-frame traceback from the zero
//! state, ties broken toward the lower-numbered predecessor so repeated runs
//! are bit-identical.
//!
//! Pinning is the feedback half of the receiver loop: once an outer-code
//! block decodes, its information bits are known exactly, and the next
//! Viterbi pass should never contradict them. [`apply_pins`] records the
//! known bits in the frame and replaces the two coded-bit LLRs of every
//! pinned step whose 7-bit encoder window is fully determined with
//! ±pin_magnitude matching the re-encoded local outputs. The decoder
//! additionally treats pinned inputs as hard trellis constraints (only
//! branches carrying the pinned bit survive), which is what makes the
//! "decoded bits agree with every pin" guarantee exact rather than merely
//! overwhelmingly likely — a window that straddles a not-yet-decoded
//! neighboring byte cannot be re-encoded, but the constraint still holds.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConvError {
    /// LLR vector length is odd or shorter than the flush tail.
    #[error("LLR length {0} does not describe an integer number of info bits")]
    BadLlrLength(usize),
    #[error("pin index {index} out of range for {info_len} info bits")]
    PinOutOfRange { index: usize, info_len: usize },
    #[error("invalid generator configuration: {0}")]
    BadGenerators(String),
}

/// Rate-1/2 feedforward convolutional code.
#[derive(Debug, Clone)]
pub struct ConvCode {
    constraint_len: u32,
    /// Tap masks, MSB = current bit. Degree < K.
    generators: [u32; 2],
    /// CCSDS ground stations often invert the second symbol; off by default
    /// and exposed only so captures using that convention can be matched.
    g2_invert: bool,
}

impl ConvCode {
    /// The conventional K=7, 171/133 (octal) code.
    pub fn standard() -> ConvCode {
        ConvCode::new(7, [0o171, 0o133], false).expect("standard generators are valid")
    }

    pub fn new(constraint_len: u32, generators: [u32; 2], g2_invert: bool) -> Result<ConvCode, ConvError> {
        if !(2..=16).contains(&constraint_len) {
            return Err(ConvError::BadGenerators(format!(
                "constraint length {constraint_len} outside 2..=16"
            )));
        }
        let top = 1u32 << (constraint_len - 1);
        for (i, &g) in generators.iter().enumerate() {
            if g >> constraint_len != 0 {
                return Err(ConvError::BadGenerators(format!(
                    "generator {i} = {g:#o} has degree ≥ K"
                )));
            }
            if g & top == 0 {
                return Err(ConvError::BadGenerators(format!(
                    "generator {i} = {g:#o} does not tap the current bit"
                )));
            }
        }
        Ok(ConvCode { constraint_len, generators, g2_invert })
    }

    pub fn constraint_len(&self) -> u32 {
        self.constraint_len
    }
    /// Memory length K−1 (number of flush bits, log2 of the state count).
    pub fn memory(&self) -> usize {
        (self.constraint_len - 1) as usize
    }
    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }
    /// Coded-bit count for `info_len` information bits, flush included.
    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.memory())
    }

    /// Output pair for a full register value (current bit in the top
    /// position, oldest in bit 0), packed as o1·2 + o2.
    #[inline]
    fn outputs(&self, full: u32) -> u8 {
        let o1 = (full & self.generators[0]).count_ones() & 1;
        let o2 = ((full & self.generators[1]).count_ones() & 1) ^ self.g2_invert as u32;
        (o1 << 1 | o2) as u8
    }
}

/// Per-coded-bit log-likelihood ratios for one frame, positive ⇒ bit 0 more
/// likely, together with the accumulated pin overlay.
#[derive(Debug, Clone)]
pub struct LlrFrame {
    values: Vec<f64>,
    /// One entry per info bit: None where free, Some(bit) where pinned.
    pins: Vec<Option<bool>>,
}

impl LlrFrame {
    /// Wraps raw LLR values, validating that the length corresponds to a
    /// whole number of info bits plus the flush tail.
    pub fn new(values: Vec<f64>, code: &ConvCode) -> Result<LlrFrame, ConvError> {
        if !values.len().is_multiple_of(2) || values.len() / 2 < code.memory() {
            return Err(ConvError::BadLlrLength(values.len()));
        }
        let info_len = values.len() / 2 - code.memory();
        Ok(LlrFrame { values, pins: vec![None; info_len] })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn info_len(&self) -> usize {
        self.pins.len()
    }
    /// Pinned bits as (info-bit index, value) pairs, ascending.
    pub fn pinned(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.pins.iter().enumerate().filter_map(|(i, p)| p.map(|b| (i, b)))
    }
    pub fn pin_count(&self) -> usize {
        self.pins.iter().filter(|p| p.is_some()).count()
    }
}

/// Known information bits to enforce on the next decode: info-bit index →
/// bit value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PinMask {
    entries: BTreeMap<usize, bool>,
}

impl PinMask {
    pub fn new() -> PinMask {
        PinMask::default()
    }

    pub fn insert(&mut self, index: usize, bit: bool) {
        self.entries.insert(index, bit);
    }

    /// Pins all eight bits of a byte, MSB first, at info-bit offset 8·byte_index.
    pub fn insert_byte(&mut self, byte_index: usize, value: u8) {
        for b in 0..8 {
            self.insert(byte_index * 8 + b, (value >> (7 - b)) & 1 == 1);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.entries.iter().map(|(&i, &b)| (i, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(usize, bool)> for PinMask {
    fn from_iter<T: IntoIterator<Item = (usize, bool)>>(iter: T) -> Self {
        PinMask { entries: iter.into_iter().collect() }
    }
}

/// Encodes `bits` (0/1 values) and the K−1 zero flush; returns 2·(len+K−1)
/// coded bits.
pub fn conv_encode(bits: &[u8], code: &ConvCode) -> Vec<u8> {
    let memory = code.memory();
    let mut out = Vec::with_capacity(code.coded_len(bits.len()));
    let mut state = 0u32;
    for &bit in bits.iter().chain(std::iter::repeat_n(&0u8, memory)) {
        let full = ((bit as u32) << memory) | state;
        let pair = code.outputs(full);
        out.push(pair >> 1);
        out.push(pair & 1);
        state = full >> 1;
    }
    out
}

/// Maximum-metric path through the trellis, zero-state terminated; returns
/// the information bits (flush stripped). Pinned inputs recorded in the
/// frame are enforced as hard branch constraints.
pub fn viterbi_decode(llrs: &LlrFrame, code: &ConvCode) -> Result<Vec<u8>, ConvError> {
    let memory = code.memory();
    let num_states = code.num_states();
    let info_len = llrs.info_len();
    let steps = info_len + memory;

    // Output pair per full register value, precomputed once.
    let outputs: Vec<u8> = (0..2 * num_states as u32).map(|full| code.outputs(full)).collect();

    let mut metrics = vec![f64::NEG_INFINITY; num_states];
    metrics[0] = 0.0;
    let mut next_metrics = vec![f64::NEG_INFINITY; num_states];
    let mut backptr = vec![0u32; steps * num_states];

    for t in 0..steps {
        let obs0 = llrs.values[2 * t];
        let obs1 = llrs.values[2 * t + 1];
        // Branch metric per output pair o1o2: obs0·(1−2o1) + obs1·(1−2o2).
        let bm = [obs0 + obs1, obs0 - obs1, -obs0 + obs1, -obs0 - obs1];
        // The input bit carried by every transition into state s' is that
        // state's top bit; flush steps force it to 0, pins force it to the
        // pinned value.
        let required: Option<bool> =
            if t >= info_len { Some(false) } else { llrs.pins[t] };

        for (sp, slot) in next_metrics.iter_mut().enumerate() {
            let input = sp >> (memory - 1) != 0;
            if required.is_some_and(|v| v != input) {
                *slot = f64::NEG_INFINITY;
                continue;
            }
            // The two register values that shift down into sp.
            let full0 = (2 * sp) as u32;
            let full1 = full0 + 1;
            let p0 = (full0 as usize) & (num_states - 1);
            let p1 = (full1 as usize) & (num_states - 1);
            let m0 = metrics[p0] + bm[outputs[full0 as usize] as usize];
            let m1 = metrics[p1] + bm[outputs[full1 as usize] as usize];
            // Tie goes to the lower-numbered predecessor, which is p0
            // (p1 = p0 + 1 always).
            if m0 >= m1 {
                *slot = m0;
                backptr[t * num_states + sp] = p0 as u32;
            } else {
                *slot = m1;
                backptr[t * num_states + sp] = p1 as u32;
            }
        }
        std::mem::swap(&mut metrics, &mut next_metrics);
    }

    // Zero-state termination: trace back from state 0.
    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (state >> (memory - 1)) as u8;
        state = backptr[t * num_states + state] as usize;
    }
    bits.truncate(info_len);
    Ok(bits)
}

/// Returns a new frame with `pins` merged into the overlay and, for every
/// pinned step whose full K-bit encoder window is determined (by other pins,
/// the leading zero state, or the zero flush), the two coded-bit LLRs
/// replaced with ±pin_magnitude matching the re-encoded local outputs.
/// Observations of unpinned steps are never touched.
pub fn apply_pins(
    llrs: &LlrFrame,
    pins: &PinMask,
    pin_magnitude: f64,
    code: &ConvCode,
) -> Result<LlrFrame, ConvError> {
    assert!(pin_magnitude > 0.0, "pin magnitude must be positive");
    let info_len = llrs.info_len();
    let memory = code.memory();
    let mut out = llrs.clone();
    for (index, bit) in pins.iter() {
        if index >= info_len {
            return Err(ConvError::PinOutOfRange { index, info_len });
        }
        out.pins[index] = Some(bit);
    }

    // Known value of info bit `i`, treating positions before the frame and
    // in the flush tail as hard zeros.
    let known = |i: isize| -> Option<bool> {
        if i < 0 || i as usize >= info_len {
            Some(false)
        } else {
            out.pins[i as usize]
        }
    };

    for t in 0..info_len {
        if out.pins[t].is_none() {
            continue;
        }
        // Re-encode locally: needs bits t−(K−1)+1 ..= t all known.
        let mut full = 0u32;
        let mut determined = true;
        for offset in 0..=memory as isize {
            match known(t as isize - offset) {
                Some(b) => full |= (b as u32) << (memory as isize - offset),
                None => {
                    determined = false;
                    break;
                }
            }
        }
        if !determined {
            continue;
        }
        let pair = code.outputs(full);
        out.values[2 * t] = if pair >> 1 == 0 { pin_magnitude } else { -pin_magnitude };
        out.values[2 * t + 1] = if pair & 1 == 0 { pin_magnitude } else { -pin_magnitude };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;
    use crate::rng::Rng;

    fn random_bits(rng: &mut Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| (rng.next_u64() & 1) as u8).collect()
    }

    /// Noiseless LLRs: +BIG for coded bit 0, −BIG for 1.
    fn noiseless_llrs(coded: &[u8], code: &ConvCode) -> LlrFrame {
        let values = coded.iter().map(|&b| if b == 0 { 20.0 } else { -20.0 }).collect();
        LlrFrame::new(values, code).unwrap()
    }

    #[test]
    fn all_zero_input_encodes_to_all_zero() {
        let code = ConvCode::standard();
        assert_eq!(conv_encode(&[0; 10], &code), vec![0; 2 * 16]);
    }

    #[test]
    fn impulse_response_matches_tap_masks() {
        // A single 1 then zeros walks the impulse through both registers:
        // G1 = 171o = 1111001b → 1,1,1,1,0,0,1; G2 = 133o = 1011011b →
        // 1,0,1,1,0,1,1. Pairs: (1,1),(1,0),(1,1),(1,1),(0,0),(0,1),(1,1).
        let code = ConvCode::standard();
        let coded = conv_encode(&[1], &code);
        let pairs: Vec<(u8, u8)> =
            coded.chunks(2).map(|c| (c[0], c[1])).collect();
        assert_eq!(
            pairs,
            vec![(1, 1), (1, 0), (1, 1), (1, 1), (0, 0), (0, 1), (1, 1)]
        );
    }

    #[test]
    fn coded_length_includes_flush() {
        let code = ConvCode::standard();
        assert_eq!(conv_encode(&[1, 0, 1], &code).len(), 2 * (3 + 6));
    }

    #[test]
    fn generator_validation() {
        assert!(ConvCode::new(7, [0o171, 0o033], false).is_err(), "no current-bit tap");
        assert!(ConvCode::new(7, [0o371, 0o133], false).is_err(), "degree too high");
        assert!(ConvCode::new(1, [1, 1], false).is_err());
    }

    #[test]
    fn g2_inversion_flips_second_symbol_only() {
        let plain = ConvCode::standard();
        let inverted = ConvCode::new(7, [0o171, 0o133], true).unwrap();
        let mut rng = Rng::seeded(2);
        let bits = random_bits(&mut rng, 40);
        let a = conv_encode(&bits, &plain);
        let b = conv_encode(&bits, &inverted);
        for i in 0..a.len() {
            if i % 2 == 0 {
                assert_eq!(a[i], b[i]);
            } else {
                assert_eq!(a[i] ^ 1, b[i]);
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let code = ConvCode::standard();
        let mut rng = Rng::seeded(3);
        for len in [1, 7, 64, 800] {
            let bits = random_bits(&mut rng, len);
            let coded = conv_encode(&bits, &code);
            let decoded = viterbi_decode(&noiseless_llrs(&coded, &code), &code).unwrap();
            assert_eq!(decoded, bits);
        }
    }

    #[test]
    fn all_zero_llrs_decode_deterministically() {
        let code = ConvCode::standard();
        let frame = LlrFrame::new(vec![0.0; 2 * 106], &code).unwrap();
        let a = viterbi_decode(&frame, &code).unwrap();
        let b = viterbi_decode(&frame, &code).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        // With every metric tied, the all-lower-predecessor path is the
        // all-zero path.
        assert_eq!(a, vec![0; 100]);
    }

    #[test]
    fn rerun_on_noisy_frame_is_bit_identical() {
        let code = ConvCode::standard();
        let mut rng = Rng::seeded(4);
        let bits = random_bits(&mut rng, 500);
        let coded = conv_encode(&bits, &code);
        let sigma = 1.0;
        let samples = channel::transmit(&coded, sigma, &mut rng);
        let values = channel::llr(&samples, sigma);
        let frame = LlrFrame::new(values, &code).unwrap();
        assert_eq!(
            viterbi_decode(&frame, &code).unwrap(),
            viterbi_decode(&frame, &code).unwrap()
        );
    }

    #[test]
    fn llr_length_validation() {
        let code = ConvCode::standard();
        assert!(matches!(
            LlrFrame::new(vec![0.0; 13], &code),
            Err(ConvError::BadLlrLength(13))
        ));
        assert!(matches!(
            LlrFrame::new(vec![0.0; 10], &code),
            Err(ConvError::BadLlrLength(10))
        ));
        // Exactly the flush: zero info bits is degenerate but well-formed.
        assert_eq!(LlrFrame::new(vec![0.0; 12], &code).unwrap().info_len(), 0);
    }

    #[test]
    fn empty_pin_mask_is_identity() {
        let code = ConvCode::standard();
        let mut rng = Rng::seeded(5);
        let bits = random_bits(&mut rng, 100);
        let coded = conv_encode(&bits, &code);
        let frame = noiseless_llrs(&coded, &code);
        let pinned = apply_pins(&frame, &PinMask::new(), 1e6, &code).unwrap();
        assert_eq!(pinned.values(), frame.values());
        assert_eq!(pinned.pin_count(), 0);
    }

    #[test]
    fn pin_out_of_range_rejected() {
        let code = ConvCode::standard();
        let frame = LlrFrame::new(vec![0.0; 2 * 26], &code).unwrap(); // 20 info bits
        let mut pins = PinMask::new();
        pins.insert(20, true);
        assert!(matches!(
            apply_pins(&frame, &pins, 1e6, &code),
            Err(ConvError::PinOutOfRange { index: 20, info_len: 20 })
        ));
    }

    #[test]
    fn fully_pinned_frame_decodes_to_pins_exactly() {
        // Pin every info bit of a frame whose observations all scream the
        // *complement*: the pins must still win.
        let code = ConvCode::standard();
        let mut rng = Rng::seeded(6);
        let bits = random_bits(&mut rng, 200);
        let coded = conv_encode(&bits, &code);
        let hostile: Vec<f64> =
            coded.iter().map(|&b| if b == 0 { -30.0 } else { 30.0 }).collect();
        let frame = LlrFrame::new(hostile, &code).unwrap();
        let pins: PinMask =
            bits.iter().enumerate().map(|(i, &b)| (i, b == 1)).collect();
        let pinned = apply_pins(&frame, &pins, 1e6, &code).unwrap();
        // Every info-bit step has a fully determined window now.
        for (t, &v) in pinned.values().iter().take(2 * 200).enumerate() {
            assert_eq!(v.abs(), 1e6, "entry {t} must be overwritten");
        }
        let decoded = viterbi_decode(&pinned, &code).unwrap();
        assert_eq!(decoded, bits);
    }

    #[test]
    fn sparse_pins_always_respected() {
        // Pin scattered single bits (windows not determined, so only the
        // structural constraint acts) under heavy noise; the decoded bits
        // at pinned positions must match in every trial.
        let code = ConvCode::standard();
        let mut rng = Rng::seeded(7);
        for _ in 0..50 {
            let bits = random_bits(&mut rng, 240);
            let coded = conv_encode(&bits, &code);
            let sigma = 1.4; // severe
            let samples = channel::transmit(&coded, sigma, &mut rng);
            let frame = LlrFrame::new(channel::llr(&samples, sigma), &code).unwrap();
            let mut pins = PinMask::new();
            for _ in 0..24 {
                let i = rng.next_below(240) as usize;
                pins.insert(i, bits[i] == 1);
            }
            let pinned = apply_pins(&frame, &pins, 1e6, &code).unwrap();
            let decoded = viterbi_decode(&pinned, &code).unwrap();
            for (i, b) in pins.iter() {
                assert_eq!(decoded[i] == 1, b, "pin at {i} violated");
            }
        }
    }

    #[test]
    fn pins_reduce_unpinned_ber_on_average() {
        // Paired comparison: same noisy frames decoded bare and with 30% of
        // info bits pinned to their true values; BER over *unpinned*
        // positions must not get worse.
        let code = ConvCode::standard();
        let frames = 500;
        let len = 600;
        let mut bare_errors = 0u64;
        let mut pinned_errors = 0u64;
        let mut unpinned_bits = 0u64;
        for f in 0..frames {
            let mut content = Rng::substream(0xbe7, 1, f);
            let mut noise = Rng::substream(0xbe7, 2, f);
            let bits = random_bits(&mut content, len);
            let coded = conv_encode(&bits, &code);
            let sigma = 1.1;
            let samples = channel::transmit(&coded, sigma, &mut noise);
            let frame = LlrFrame::new(channel::llr(&samples, sigma), &code).unwrap();

            let mut pins = PinMask::new();
            let mut picker = Rng::substream(0xbe7, 3, f);
            let mut idx: Vec<usize> = (0..len).collect();
            picker.shuffle(&mut idx);
            for &i in idx.iter().take(len * 3 / 10) {
                pins.insert(i, bits[i] == 1);
            }

            let bare = viterbi_decode(&frame, &code).unwrap();
            let with_pins =
                viterbi_decode(&apply_pins(&frame, &pins, 1e6, &code).unwrap(), &code).unwrap();
            for i in 0..len {
                if pins.iter().any(|(p, _)| p == i) {
                    continue;
                }
                unpinned_bits += 1;
                bare_errors += (bare[i] != bits[i]) as u64;
                pinned_errors += (with_pins[i] != bits[i]) as u64;
            }
        }
        assert!(bare_errors > 0, "test needs a noisy operating point");
        assert!(
            pinned_errors <= bare_errors,
            "pinning made unpinned bits worse: {pinned_errors} vs {bare_errors} over {unpinned_bits}"
        );
    }

    #[test]
    fn coded_beats_uncoded_at_4db() {
        // At 4 dB Eb/N0 the uncoded hard-decision BER is ≈ 1.25e-2; the
        // K=7 code at the same Eb/N0 (rate-1/2 ⇒ 2 channel uses per bit)
        // must come out strictly lower over ≥10⁶ info bits.
        let code = ConvCode::standard();
        let info_per_frame = 10_000;
        let frames = 100;
        let sigma = channel::sigma_for(4.0, 0.5);
        let mut errors = 0u64;
        for f in 0..frames {
            let mut content = Rng::substream(0x4db, 1, f);
            let mut noise = Rng::substream(0x4db, 2, f);
            let bits = random_bits(&mut content, info_per_frame);
            let coded = conv_encode(&bits, &code);
            let samples = channel::transmit(&coded, sigma, &mut noise);
            let frame = LlrFrame::new(channel::llr(&samples, sigma), &code).unwrap();
            let decoded = viterbi_decode(&frame, &code).unwrap();
            errors += bits.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64;
        }
        let ber = errors as f64 / (frames * info_per_frame as u64) as f64;
        assert!(ber < 1.25e-2, "coded BER {ber} not below uncoded 1.25e-2");
    }
}
