//! The iterative receiver chain: soft Viterbi decoding, deinterleaving,
//! per-block Reed-Solomon decoding with scheduled erasure marking, and
//! state-pinning feedback from corrected blocks into the next Viterbi pass.
//!
//! A frame either fully recovers (every interleaved block decodes and, when
//! enabled, the payload CRC verifies) or the loop stops after an iteration
//! makes no progress. Failure is a report state, never an `Err`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::conv::{apply_pins, conv_encode, viterbi_decode, ConvCode, ConvError, LlrFrame, PinMask};
use crate::frame::{
    crc_verify, deinterleave, interleave, pack_bits, unpack_bits, FrameError, FrameGeometry,
};
use crate::model::{
    rank_erasures, score_frame, ModelError, ModelParams, ScoredFrame, KNOWN_PROB_EPSILON,
};
use crate::rs::{rs_decode, rs_encode, ErasureSet, RsCode, RsError};

/// A block decode with 2e+f within this slack of the parity budget (for the
/// production code: 2e+f > 32−6 = 26) is accepted but flagged low-margin:
/// its correction consumed nearly the whole minimum distance, so a
/// mis-correction is comparatively likely. If the frame later fails its
/// CRC, low-margin blocks are invalidated and the loop restarts once.
pub const LOW_MARGIN_SLACK: usize = 6;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("unknown mode `{0}` (expected baseline, pinning, pinning+ml, or oracle-ml)")]
    BadMode(String),
    #[error("erasure budget n_max={n_max} exceeds the code's parity length {parity}")]
    ErasureBudget { n_max: usize, parity: usize },
    #[error("n_start={n_start} exceeds n_max={n_max}")]
    ScheduleStart { n_start: usize, n_max: usize },
    #[error("n_step must be at least 1")]
    ZeroStep,
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error("pin magnitude must be positive and finite, got {0}")]
    BadPinMagnitude(f64),
    #[error("geometry ({n},{k}) does not match the block code ({code_n},{code_k})")]
    GeometryMismatch { n: usize, k: usize, code_n: usize, code_k: usize },
    #[error("payload length {got} does not match the geometry ({expected} bytes)")]
    WrongPayloadLength { got: usize, expected: usize },
    #[error("LLR frame carries {got} info bits, geometry requires {expected}")]
    WrongFrameLength { got: usize, expected: usize },
    #[error("locator truth length {got} does not match the payload ({expected} bytes)")]
    TruthLength { got: usize, expected: usize },
    #[error(transparent)]
    Conv(#[from] ConvError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Rs(#[from] RsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Receiver operating mode: which feedback mechanisms the decode loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// One Viterbi pass, zero-erasure RS per block. No feedback.
    Baseline,
    /// Iterative: corrected blocks pin the convolutional decoder's input.
    Pinning,
    /// Pinning plus learned erasure marking from a trained scorer.
    PinningMl,
    /// Pinning plus erasure marking from the true corruption positions
    /// (simulation upper bound).
    OracleMl,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::Pinning, Mode::PinningMl, Mode::OracleMl];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Pinning => "pinning",
            Mode::PinningMl => "pinning+ml",
            Mode::OracleMl => "oracle-ml",
        }
    }

    fn uses_pinning(self) -> bool {
        self != Mode::Baseline
    }

    fn uses_marking(self) -> bool {
        matches!(self, Mode::PinningMl | Mode::OracleMl)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Mode, PipelineError> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| PipelineError::BadMode(s.to_string()))
    }
}

impl Serialize for Mode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Tuning knobs for the iterative decode loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    /// First erasure count tried on each undecoded block.
    pub n_start: usize,
    /// Schedule increment.
    pub n_step: usize,
    /// Erasure ceiling; always the schedule's final element. Keeping it at
    /// 22 preserves unknown-error capability of ⌊(32−22)/2⌋ = 5 symbols.
    pub n_max: usize,
    /// Hard cap on decode iterations per pass, guaranteeing termination
    /// even under oscillating mis-corrections.
    pub max_iterations: usize,
    /// LLR magnitude written over pinned coded bits.
    pub pin_magnitude: f64,
    /// Gate full-frame acceptance on the payload CRC and enable the
    /// low-margin restart policy.
    pub crc_enabled: bool,
    /// Feedback mechanisms to use.
    pub mode: Mode,
    /// When true, erasure marking in iteration i scores the bytes produced
    /// by iteration i−1 instead of the bytes just re-decoded in iteration i
    /// (the loop's default is Viterbi first, then rescoring; the first
    /// iteration necessarily scores its own Viterbi output either way).
    pub rescore_before_viterbi: bool,
}

impl ChainConfig {
    pub fn with_mode(mode: Mode) -> ChainConfig {
        ChainConfig { mode, ..ChainConfig::default() }
    }

    /// Checks internal consistency and compatibility with the block code.
    pub fn validate(&self, code: &RsCode) -> Result<(), PipelineError> {
        if self.n_max > code.parity_len() {
            return Err(PipelineError::ErasureBudget {
                n_max: self.n_max,
                parity: code.parity_len(),
            });
        }
        if self.n_start > self.n_max {
            return Err(PipelineError::ScheduleStart { n_start: self.n_start, n_max: self.n_max });
        }
        if self.n_step == 0 {
            return Err(PipelineError::ZeroStep);
        }
        if self.max_iterations == 0 {
            return Err(PipelineError::ZeroIterations);
        }
        if !(self.pin_magnitude.is_finite() && self.pin_magnitude > 0.0) {
            return Err(PipelineError::BadPinMagnitude(self.pin_magnitude));
        }
        Ok(())
    }
}

impl Default for ChainConfig {
    fn default() -> ChainConfig {
        ChainConfig {
            n_start: 4,
            n_step: 2,
            n_max: 22,
            max_iterations: 8,
            pin_magnitude: 1e6,
            crc_enabled: true,
            mode: Mode::Baseline,
            rescore_before_viterbi: false,
        }
    }
}

/// The erasure counts tried, in order, on each undecoded block: the
/// arithmetic sequence from `n_start` by `n_step`, clipped to `n_max`, with
/// `n_max` always the final element.
pub fn erasure_schedule(cfg: &ChainConfig) -> Vec<usize> {
    let mut schedule: Vec<usize> =
        (cfg.n_start..=cfg.n_max).step_by(cfg.n_step.max(1)).collect();
    if schedule.last() != Some(&cfg.n_max) {
        schedule.push(cfg.n_max);
    }
    schedule
}

/// Byte-corruption scorer used to rank erasure candidates: the test seam
/// between the decode loop and whatever supplies per-byte probabilities.
pub trait ErrorLocator: Sync {
    /// Scores every payload byte with a corruption probability in [0, 1].
    /// `known` marks bytes verified correct (from decoded blocks); their
    /// probability must come back ≈ 0 so they are never candidates.
    fn score(&self, payload: &[u8], known: &[bool]) -> Result<ScoredFrame, PipelineError>;
}

/// No information: every unknown byte is equally suspect, so ranking
/// degenerates to ascending position order.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformLocator;

impl ErrorLocator for UniformLocator {
    fn score(&self, payload: &[u8], known: &[bool]) -> Result<ScoredFrame, PipelineError> {
        let probs = known
            .iter()
            .map(|&kn| if kn { KNOWN_PROB_EPSILON } else { 0.5 })
            .take(payload.len())
            .collect();
        Ok(ScoredFrame { probs })
    }
}

/// Simulation-only upper bound: scores from the true transmitted payload.
/// Bytes that differ from the truth score ≈ 1, matching bytes ≈ 0.
#[derive(Debug, Clone)]
pub struct OracleLocator {
    truth: Vec<u8>,
}

impl OracleLocator {
    pub fn new(truth: Vec<u8>) -> OracleLocator {
        OracleLocator { truth }
    }
}

impl ErrorLocator for OracleLocator {
    fn score(&self, payload: &[u8], known: &[bool]) -> Result<ScoredFrame, PipelineError> {
        if payload.len() != self.truth.len() {
            return Err(PipelineError::TruthLength {
                got: self.truth.len(),
                expected: payload.len(),
            });
        }
        let probs = payload
            .iter()
            .zip(self.truth.iter())
            .zip(known.iter())
            .map(|((&got, &want), &kn)| {
                if kn || got == want {
                    KNOWN_PROB_EPSILON
                } else {
                    1.0 - KNOWN_PROB_EPSILON
                }
            })
            .collect();
        Ok(ScoredFrame { probs })
    }
}

/// Scores with a trained model over sliding context windows.
pub struct ModelLocator {
    params: ModelParams,
    geometry: FrameGeometry,
}

impl ModelLocator {
    pub fn new(params: ModelParams, geometry: FrameGeometry) -> ModelLocator {
        ModelLocator { params, geometry }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

impl ErrorLocator for ModelLocator {
    fn score(&self, payload: &[u8], known: &[bool]) -> Result<ScoredFrame, PipelineError> {
        Ok(score_frame(payload, known, &self.params, &self.geometry)?)
    }
}

/// One accepted block decode.
#[derive(Debug, Clone, Serialize)]
pub struct BlockDecode {
    pub block: usize,
    /// Erasures supplied to the accepting decode (f).
    pub erasures: usize,
    /// Corrections outside the supplied erasures (e).
    pub errors: usize,
    /// 2e+f came within [`LOW_MARGIN_SLACK`] of the parity budget.
    pub low_margin: bool,
}

/// What one iteration of the loop accomplished.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationReport {
    /// Whether this iteration began with a (re-)run of the Viterbi decoder.
    pub viterbi_run: bool,
    /// Blocks newly decoded this iteration, in acceptance order.
    pub decodes: Vec<BlockDecode>,
}

/// Full account of one frame decode.
#[derive(Debug, Clone, Serialize)]
pub struct DecodeReport {
    pub mode: Mode,
    /// Every block decoded and, when CRC gating is on, the payload verified.
    pub success: bool,
    /// Iterations executed, including any restarted pass.
    pub iterations: usize,
    pub viterbi_runs: usize,
    /// Whether the low-margin restart policy fired.
    pub restarted: bool,
    /// Final payload CRC state; absent when CRC gating is off.
    pub crc_ok: Option<bool>,
    /// Blocks decoded when the loop stopped.
    pub decoded_blocks: usize,
    /// Total erasures supplied across accepted block decodes.
    pub erasures_total: usize,
    /// Info bits pinned when the loop stopped.
    pub pinned_bits: usize,
    pub per_iteration: Vec<IterationReport>,
    /// Recovered payload: corrected bytes for decoded blocks, the last
    /// Viterbi output for the rest.
    #[serde(serialize_with = "hex_bytes")]
    pub final_payload: Vec<u8>,
    /// Set by [`DecodeReport::finalize_with_truth`]; simulation only.
    pub exact_match: Option<bool>,
    /// Payload bit errors vs truth; simulation only.
    pub bit_errors: Option<usize>,
    /// Blocks that decoded to something other than the transmitted
    /// codeword (mis-corrections); simulation only.
    pub miscorrected_blocks: Vec<usize>,
}

fn hex_bytes<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
    use fmt::Write;
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(out, "{b:02x}").expect("string write cannot fail");
    }
    serializer.serialize_str(&out)
}

impl DecodeReport {
    /// Blocks decoded per iteration, for monotonicity checks.
    pub fn decoded_per_iteration(&self) -> Vec<Vec<usize>> {
        self.per_iteration
            .iter()
            .map(|it| it.decodes.iter().map(|d| d.block).collect())
            .collect()
    }

    /// Fills the truth-dependent fields by comparing the recovered payload
    /// against the transmitted one.
    pub fn finalize_with_truth(&mut self, truth: &[u8], geometry: &FrameGeometry) {
        assert_eq!(truth.len(), self.final_payload.len(), "truth length mismatch");
        self.exact_match = Some(truth == self.final_payload.as_slice());
        self.bit_errors = Some(
            truth
                .iter()
                .zip(self.final_payload.iter())
                .map(|(&a, &b)| (a ^ b).count_ones() as usize)
                .sum(),
        );
        let decoded: BTreeSet<usize> = self
            .per_iteration
            .iter()
            .flat_map(|it| it.decodes.iter().map(|d| d.block))
            .collect();
        self.miscorrected_blocks = decoded
            .into_iter()
            .filter(|&j| {
                (0..geometry.k).any(|s| {
                    let pos = geometry.stream_pos(j, s);
                    self.final_payload[pos] != truth[pos]
                })
            })
            .collect();
    }
}

/// Splits a payload into the per-block RS messages it interleaves from.
fn payload_messages(payload: &[u8], geometry: &FrameGeometry) -> Vec<Vec<u8>> {
    (0..geometry.depth)
        .map(|j| (0..geometry.k).map(|s| payload[geometry.stream_pos(j, s)]).collect())
        .collect()
}

/// Encodes a payload end to end: split into per-block messages, RS-encode
/// each, interleave to the symbol stream, and convolutionally encode the
/// stream's bits. Returns the coded bit sequence (0/1 values).
pub fn encode_frame(
    payload: &[u8],
    rs: &RsCode,
    conv: &ConvCode,
    geometry: &FrameGeometry,
) -> Result<Vec<u8>, PipelineError> {
    check_geometry(rs, geometry)?;
    if payload.len() != geometry.payload_bytes() {
        return Err(PipelineError::WrongPayloadLength {
            got: payload.len(),
            expected: geometry.payload_bytes(),
        });
    }
    let blocks: Vec<Vec<u8>> = payload_messages(payload, geometry)
        .iter()
        .map(|msg| rs_encode(msg, rs))
        .collect::<Result<_, _>>()?;
    let stream = interleave(&blocks, geometry)?;
    Ok(conv_encode(&pack_bits(&stream), conv))
}

fn check_geometry(rs: &RsCode, geometry: &FrameGeometry) -> Result<(), PipelineError> {
    if rs.n() != geometry.n || rs.k() != geometry.k {
        return Err(PipelineError::GeometryMismatch {
            n: geometry.n,
            k: geometry.k,
            code_n: rs.n(),
            code_k: rs.k(),
        });
    }
    Ok(())
}

/// Pins the info bits carried by every symbol of a corrected block: data
/// and parity alike, since parity symbols also travel through the
/// convolutional code.
pub fn pin_from_block(
    corrected: &[u8],
    block: usize,
    geometry: &FrameGeometry,
) -> PinMask {
    let mut pins = PinMask::new();
    for (symbol, &value) in corrected.iter().enumerate() {
        pins.insert_byte(geometry.stream_pos(block, symbol), value);
    }
    pins
}

/// Decode-loop state for one frame.
struct LoopState<'a> {
    geometry: &'a FrameGeometry,
    cfg: &'a ChainConfig,
    parity_len: usize,
    /// Corrected codeword per decoded block.
    decoded: Vec<Option<Vec<u8>>>,
    /// Data bytes verified correct, payload indexing.
    known: Vec<bool>,
    /// Accumulated pin overlay for the next Viterbi run.
    pins: PinMask,
    /// Blocks accepted with thin margin since the last restart.
    low_margin: Vec<bool>,
}

impl<'a> LoopState<'a> {
    fn decoded_count(&self) -> usize {
        self.decoded.iter().filter(|d| d.is_some()).count()
    }

    fn undecoded(&self) -> Vec<usize> {
        (0..self.geometry.depth).filter(|&j| self.decoded[j].is_none()).collect()
    }

    /// Payload view: corrected data for decoded blocks, received bytes
    /// elsewhere.
    fn assemble_payload(&self, received: &[Vec<u8>]) -> Vec<u8> {
        let mut payload = vec![0u8; self.geometry.payload_bytes()];
        for j in 0..self.geometry.depth {
            let source: &[u8] = match &self.decoded[j] {
                Some(corrected) => corrected,
                None => &received[j],
            };
            for s in 0..self.geometry.k {
                payload[self.geometry.stream_pos(j, s)] = source[s];
            }
        }
        payload
    }

    /// Accepts an RS result for block `j` unless CRC gating rejects it: a
    /// decode that would complete the frame must yield a verifying payload.
    fn try_accept(
        &mut self,
        j: usize,
        corrected: Vec<u8>,
        erasures: usize,
        errors: usize,
        received: &[Vec<u8>],
        iteration: &mut IterationReport,
    ) -> bool {
        let completes = self.decoded_count() + 1 == self.geometry.depth;
        if completes && self.cfg.crc_enabled {
            let mut payload = self.assemble_payload(received);
            for s in 0..self.geometry.k {
                payload[self.geometry.stream_pos(j, s)] = corrected[s];
            }
            if !crc_verify(&payload) {
                return false;
            }
        }
        let low_margin =
            2 * errors + erasures > self.parity_len.saturating_sub(LOW_MARGIN_SLACK);
        self.low_margin[j] = low_margin;
        for s in 0..self.geometry.k {
            self.known[self.geometry.stream_pos(j, s)] = true;
        }
        if self.cfg.mode.uses_pinning() {
            for (index, bit) in pin_from_block(&corrected, j, self.geometry).iter() {
                self.pins.insert(index, bit);
            }
        }
        self.decoded[j] = Some(corrected);
        iteration.decodes.push(BlockDecode { block: j, erasures, errors, low_margin });
        true
    }

    /// Drops low-margin blocks and rebuilds the known mask and pin overlay
    /// from the survivors.
    fn invalidate_low_margin(&mut self) {
        for j in 0..self.geometry.depth {
            if self.low_margin[j] {
                self.decoded[j] = None;
                self.low_margin[j] = false;
            }
        }
        self.known = vec![false; self.geometry.payload_bytes()];
        self.pins = PinMask::new();
        for j in 0..self.geometry.depth {
            if let Some(corrected) = self.decoded[j].clone() {
                for s in 0..self.geometry.k {
                    self.known[self.geometry.stream_pos(j, s)] = true;
                }
                if self.cfg.mode.uses_pinning() {
                    for (index, bit) in pin_from_block(&corrected, j, self.geometry).iter() {
                        self.pins.insert(index, bit);
                    }
                }
            }
        }
    }
}

/// Runs the full iterative decode on one frame's LLRs.
///
/// Each iteration: (1) Viterbi with the accumulated pins; (2) unpack and
/// deinterleave the decoded stream; (3) zero-erasure RS on each undecoded
/// block; (4) in marking modes, score the assembled payload with the known
/// mask and walk the erasure schedule per remaining block, supplying the
/// top-N ranked data positions; (5) acceptance is gated on the payload CRC
/// when the block would complete the frame; (6) accepted blocks pin their
/// symbols' info bits and extend the known mask; (7) the loop stops when an
/// iteration decodes nothing new, everything is decoded, or the iteration
/// cap is reached. If CRC gating is on, the frame did not verify, and some
/// accepted block was flagged low-margin, those blocks are invalidated and
/// the loop restarts once.
pub fn decode_frame(
    llrs: &LlrFrame,
    locator: &dyn ErrorLocator,
    cfg: &ChainConfig,
    rs: &RsCode,
    conv: &ConvCode,
    geometry: &FrameGeometry,
) -> Result<DecodeReport, PipelineError> {
    cfg.validate(rs)?;
    check_geometry(rs, geometry)?;
    let expected_bits = geometry.code_bytes() * 8;
    if llrs.info_len() != expected_bits {
        return Err(PipelineError::WrongFrameLength {
            got: llrs.info_len(),
            expected: expected_bits,
        });
    }

    let mut state = LoopState {
        geometry,
        cfg,
        parity_len: rs.parity_len(),
        decoded: vec![None; geometry.depth],
        known: vec![false; geometry.payload_bytes()],
        pins: PinMask::new(),
        low_margin: vec![false; geometry.depth],
    };
    let schedule = erasure_schedule(cfg);
    let max_iterations = if cfg.mode == Mode::Baseline { 1 } else { cfg.max_iterations };

    let mut per_iteration = Vec::new();
    let mut viterbi_runs = 0usize;
    let mut restarted = false;
    let mut final_payload = Vec::new();
    // Payload assembled by the previous iteration, for the swapped
    // rescore-first order.
    let mut previous_payload: Option<Vec<u8>> = None;

    'passes: loop {
        for _ in 0..max_iterations {
            let mut iteration = IterationReport { viterbi_run: true, decodes: Vec::new() };

            // (1)-(2) Viterbi under the current pin overlay, then back to
            // the interleaved symbol stream.
            let effective = apply_pins(llrs, &state.pins, cfg.pin_magnitude, conv)?;
            let bits = viterbi_decode(&effective, conv)?;
            viterbi_runs += 1;
            let stream = unpack_bits(&bits)?;
            let mut received = deinterleave(&stream, geometry)?;
            // Project each byte into the code's symbol alphabet. For sub-byte
            // fields the byte is only a container: the transmitted upper bits
            // are structurally zero, so the symbol is the low bits. A no-op
            // for GF(256).
            let symbol_mask = (rs.field().size() - 1) as u8;
            for block in &mut received {
                for byte in block.iter_mut() {
                    *byte &= symbol_mask;
                }
            }

            let stale_scored: Option<ScoredFrame> =
                match (cfg.rescore_before_viterbi, &previous_payload) {
                    (true, Some(prev)) if cfg.mode.uses_marking() => {
                        Some(locator.score(prev, &state.known)?)
                    }
                    _ => None,
                };

            // (3) Zero-erasure attempt on every undecoded block.
            for j in state.undecoded() {
                let result = rs_decode(&received[j], &ErasureSet::empty(), rs)?;
                if result.is_success() {
                    state.try_accept(
                        j,
                        result.corrected,
                        0,
                        result.errors_found,
                        &received,
                        &mut iteration,
                    );
                }
            }

            // (4) Ranked erasure marking on whatever remains.
            if cfg.mode.uses_marking() && state.decoded_count() < geometry.depth {
                let scored = match stale_scored {
                    Some(s) => s,
                    None => {
                        let payload = state.assemble_payload(&received);
                        locator.score(&payload, &state.known)?
                    }
                };
                for j in state.undecoded() {
                    let ranked = rank_erasures(&scored, j, geometry)?;
                    for &n_erasures in &schedule {
                        let set = ErasureSet::new(ranked[..n_erasures].to_vec());
                        let result = rs_decode(&received[j], &set, rs)?;
                        if result.is_success()
                            && state.try_accept(
                                j,
                                result.corrected,
                                result.erasures_used,
                                result.errors_found,
                                &received,
                                &mut iteration,
                            )
                        {
                            break;
                        }
                    }
                }
            }

            let progressed = !iteration.decodes.is_empty();
            final_payload = state.assemble_payload(&received);
            previous_payload = Some(final_payload.clone());
            per_iteration.push(iteration);

            if state.decoded_count() == geometry.depth || !progressed {
                break;
            }
        }

        let complete = state.decoded_count() == geometry.depth;
        let any_low_margin = state.low_margin.iter().any(|&l| l);
        if !complete && cfg.crc_enabled && any_low_margin && !restarted {
            restarted = true;
            state.invalidate_low_margin();
            continue 'passes;
        }
        break;
    }

    let complete = state.decoded_count() == geometry.depth;
    let crc_ok = cfg.crc_enabled.then(|| crc_verify(&final_payload));
    let success = complete && crc_ok.unwrap_or(true);
    let erasures_total = per_iteration
        .iter()
        .flat_map(|it| it.decodes.iter())
        .map(|d| d.erasures)
        .sum();

    Ok(DecodeReport {
        mode: cfg.mode,
        success,
        iterations: per_iteration.len(),
        viterbi_runs,
        restarted,
        crc_ok,
        decoded_blocks: state.decoded_count(),
        erasures_total,
        pinned_bits: state.pins.len(),
        per_iteration,
        final_payload,
        exact_match: None,
        bit_errors: None,
        miscorrected_blocks: Vec::new(),
    })
}
