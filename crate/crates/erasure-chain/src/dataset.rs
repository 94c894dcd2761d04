//! Supervised training data for the corruption scorer.
//!
//! A training example is a clean payload pushed through independent per-byte
//! substitution noise, paired with the binary mask of which bytes were
//! touched. Three synthetic payload generators with very different amounts
//! of structure are provided, because the scorer's usefulness depends
//! entirely on the payload having structure to learn:
//!
//! * `uniform-random` — i.i.d. bytes; nothing is learnable, so scores should
//!   stay near chance. Serves as the control arm.
//! * `telemetry-like` — repeating fixed-layout records with a sync byte,
//!   drifting counters, slowly varying big-endian sensor words, and
//!   low-amplitude housekeeping jitter.
//! * `markov` — an order-1 byte chain over a fixed successor map, broken
//!   with a configurable switch probability.
//!
//! Everything is deterministic given a seed: frame `i`'s content comes from
//! the `(seed, FRAME_CONTENT, i)` substream and its corruption mask from
//! `(seed, CORRUPTION, i)`, so datasets can be regenerated piecemeal and in
//! parallel.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::frame::{self, FrameGeometry};
use crate::rng::{labels, Rng};

/// Length in bytes of one telemetry record.
pub const TELEMETRY_RECORD_LEN: usize = 24;

/// Default per-byte substitution probability. Roughly five corrupted
/// symbols per depth-5 production frame land in each RS block, enough for
/// the erasure budget to matter without overwhelming it.
pub const DEFAULT_CORRUPTION_PROB: f64 = 0.02;

/// Default probability that the markov chain abandons its successor map
/// for a uniform byte; tunes the entropy of `markov` payloads.
pub const DEFAULT_MARKOV_BREAK_PROB: f64 = 0.25;

const DATASET_MAGIC: [u8; 4] = *b"ERSD";
const DATASET_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("corruption probability must lie strictly inside (0, 1), got {0}")]
    BadProbability(f64),
    #[error("need at least 10 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("unknown frame kind `{0}`")]
    BadKind(String),
    #[error("example {index} has payload length {got}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("refusing to write an empty dataset")]
    Empty,
    #[error("bad dataset magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported dataset version {0}")]
    BadVersion(u16),
    #[error("mask byte must be 0 or 1, got {0}")]
    BadMaskValue(u8),
    #[error("dataset file is truncated")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which synthetic payload generator to draw clean frames from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    UniformRandom,
    TelemetryLike,
    Markov,
}

impl FrameKind {
    pub fn name(self) -> &'static str {
        match self {
            FrameKind::UniformRandom => "uniform-random",
            FrameKind::TelemetryLike => "telemetry-like",
            FrameKind::Markov => "markov",
        }
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-random" => Ok(FrameKind::UniformRandom),
            "telemetry-like" => Ok(FrameKind::TelemetryLike),
            "markov" => Ok(FrameKind::Markov),
            other => Err(DatasetError::BadKind(other.to_string())),
        }
    }
}

/// Everything needed to regenerate a dataset from scratch.
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub kind: FrameKind,
    pub count: usize,
    pub corruption_prob: f64,
    pub seed: u64,
}

/// One supervised example: a corrupted payload and the ground-truth mask.
///
/// `mask[i]` records that byte `i` was *selected* for substitution; with
/// probability 1/256 the replacement equals the original byte and the label
/// stays 1 regardless. Labels reflect the action, not the visible change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetExample {
    pub input: Vec<u8>,
    pub mask: Vec<bool>,
}

/// Applies independent per-byte substitution noise to a clean payload.
///
/// The draw order per byte is fixed: one uniform variate decides whether the
/// byte is hit, and only then is a replacement byte drawn. Clean bytes cost
/// exactly one draw, so masks are reproducible from the stream alone.
pub fn corrupt_frame(clean: &[u8], p: f64, rng: &mut Rng) -> Result<DatasetExample, DatasetError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DatasetError::BadProbability(p));
    }
    let mut input = clean.to_vec();
    let mut mask = vec![false; clean.len()];
    for (byte, hit) in input.iter_mut().zip(mask.iter_mut()) {
        if rng.next_f64() < p {
            *byte = rng.next_byte();
            *hit = true;
        }
    }
    Ok(DatasetExample { input, mask })
}

/// Train, validation, and test slices of a dataset, in that order.
pub type SplitSlices<'a, T> = (&'a [T], &'a [T], &'a [T]);

/// Contiguous 80/10/10 split in presentation order, no shuffling.
pub fn split<T>(examples: &[T]) -> Result<SplitSlices<'_, T>, DatasetError> {
    let n = examples.len();
    if n < 10 {
        return Err(DatasetError::TooFewExamples(n));
    }
    let train_end = n * 8 / 10;
    let val_end = n * 9 / 10;
    Ok((
        &examples[..train_end],
        &examples[train_end..val_end],
        &examples[val_end..],
    ))
}

/// Draws one clean payload of the geometry's size from `rng`.
///
/// When the payload is at least two bytes long its tail is finalized with
/// the frame check sequence, so generated payloads are valid inputs for
/// checksum-gated decoding as well as for training.
pub fn generate_frame(kind: FrameKind, geometry: FrameGeometry, rng: &mut Rng) -> Vec<u8> {
    let len = geometry.payload_bytes();
    let mut payload = match kind {
        FrameKind::UniformRandom => (0..len).map(|_| rng.next_byte()).collect(),
        FrameKind::TelemetryLike => telemetry_frame(len, rng),
        FrameKind::Markov => markov_frame(len, DEFAULT_MARKOV_BREAK_PROB, rng),
    };
    if payload.len() >= 2 {
        frame::write_crc(&mut payload);
    }
    payload
}

/// Generates `count` clean frames, one content substream per frame.
pub fn generate_frames(
    kind: FrameKind,
    count: usize,
    geometry: FrameGeometry,
    seed: u64,
) -> Vec<Vec<u8>> {
    (0..count)
        .map(|i| {
            let mut rng = Rng::substream(seed, labels::FRAME_CONTENT, i as u64);
            generate_frame(kind, geometry, &mut rng)
        })
        .collect()
}

/// Corrupts pre-existing clean frames, one corruption substream per frame.
pub fn corrupt_frames(
    frames: &[Vec<u8>],
    p: f64,
    seed: u64,
) -> Result<Vec<DatasetExample>, DatasetError> {
    frames
        .iter()
        .enumerate()
        .map(|(i, clean)| {
            let mut rng = Rng::substream(seed, labels::CORRUPTION, i as u64);
            corrupt_frame(clean, p, &mut rng)
        })
        .collect()
}

/// Generates and corrupts a full dataset from one config.
pub fn build_dataset(
    config: &DatasetConfig,
    geometry: FrameGeometry,
) -> Result<Vec<DatasetExample>, DatasetError> {
    let frames = generate_frames(config.kind, config.count, geometry, config.seed);
    corrupt_frames(&frames, config.corruption_prob, config.seed)
}

/// Telemetry payload: repeated 24-byte records. Byte 0 is a fixed sync
/// marker, bytes 1-2 a little-endian record counter, bytes 3-10 four
/// big-endian sensor words following slow sinusoidal ramps with ±3-count
/// noise, bytes 11-15 per-frame constant status flags, and bytes 16-23
/// housekeeping values jittering within ±2 of per-frame baselines. The
/// final record is truncated to fit the payload.
fn telemetry_frame(len: usize, rng: &mut Rng) -> Vec<u8> {
    const SENSORS: usize = 4;
    let mut counter = rng.next_u64() as u16;
    let mut centers = [0.0f64; SENSORS];
    let mut amps = [0.0f64; SENSORS];
    let mut periods = [0.0f64; SENSORS];
    let mut phases = [0.0f64; SENSORS];
    for s in 0..SENSORS {
        centers[s] = 8000.0 + rng.next_f64() * 40000.0;
        amps[s] = 100.0 + rng.next_f64() * 300.0;
        periods[s] = 60.0 + rng.next_f64() * 100.0;
        phases[s] = rng.next_f64() * std::f64::consts::TAU;
    }
    let status = [rng.next_byte(), 0x00, 0xFF, rng.next_byte(), 0x0F];
    let mut hk_base = [0u8; 8];
    for b in hk_base.iter_mut() {
        *b = rng.next_byte();
    }

    let mut out = Vec::with_capacity(len);
    let mut rec = 0usize;
    while out.len() < len {
        let mut record = [0u8; TELEMETRY_RECORD_LEN];
        record[0] = 0xA5;
        record[1] = (counter & 0xFF) as u8;
        record[2] = (counter >> 8) as u8;
        for s in 0..SENSORS {
            let angle = std::f64::consts::TAU * rec as f64 / periods[s] + phases[s];
            let noise = (rng.next_f64() - 0.5) * 6.0;
            let v = (centers[s] + amps[s] * angle.sin() + noise).clamp(0.0, 65535.0) as u16;
            record[3 + 2 * s] = (v >> 8) as u8;
            record[4 + 2 * s] = (v & 0xFF) as u8;
        }
        record[11..16].copy_from_slice(&status);
        for (i, base) in hk_base.iter().enumerate() {
            let jitter = rng.next_below(5) as i16 - 2;
            record[16 + i] = (*base as i16 + jitter).clamp(0, 255) as u8;
        }
        let take = (len - out.len()).min(TELEMETRY_RECORD_LEN);
        out.extend_from_slice(&record[..take]);
        counter = counter.wrapping_add(1);
        rec += 1;
    }
    out
}

/// Order-1 chain: with probability `1 - break_prob` the next byte follows a
/// fixed successor permutation, otherwise it is uniform. The successor map
/// is global (derived from an internal constant, not the dataset seed), so
/// the structure is shared across datasets and therefore learnable.
pub fn markov_frame(len: usize, break_prob: f64, rng: &mut Rng) -> Vec<u8> {
    let map = markov_successors();
    let mut out = Vec::with_capacity(len);
    let mut state = rng.next_byte();
    for _ in 0..len {
        out.push(state);
        state = if rng.next_f64() < break_prob {
            rng.next_byte()
        } else {
            map[state as usize]
        };
    }
    out
}

fn markov_successors() -> &'static [u8; 256] {
    static MAP: OnceLock<[u8; 256]> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut vals: Vec<u8> = (0..=255u8).collect();
        let mut rng = Rng::seeded(0x4D41_524B_4F56_3031);
        rng.shuffle(&mut vals);
        let mut map = [0u8; 256];
        map.copy_from_slice(&vals);
        map
    })
}

/// Writes a dataset: magic `ERSD`, u16 LE version, u32 LE payload length,
/// u64 LE example count, then per example the payload bytes followed by one
/// 0/1 mask byte per position.
pub fn save_dataset(path: &Path, examples: &[DatasetExample]) -> Result<(), DatasetError> {
    let first = examples.first().ok_or(DatasetError::Empty)?;
    let len = first.input.len();
    for (index, ex) in examples.iter().enumerate() {
        if ex.input.len() != len || ex.mask.len() != len {
            return Err(DatasetError::LengthMismatch {
                index,
                expected: len,
                got: ex.input.len().max(ex.mask.len()),
            });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&(len as u32).to_le_bytes())?;
    w.write_all(&(examples.len() as u64).to_le_bytes())?;
    for ex in examples {
        w.write_all(&ex.input)?;
        let mask_bytes: Vec<u8> = ex.mask.iter().map(|&b| b as u8).collect();
        w.write_all(&mask_bytes)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`].
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetExample>, DatasetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic)?;
    if magic != DATASET_MAGIC {
        return Err(DatasetError::BadMagic(magic));
    }
    let version = u16::from_le_bytes(read_array(&mut r)?);
    if version != DATASET_VERSION {
        return Err(DatasetError::BadVersion(version));
    }
    let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        let mut input = vec![0u8; len];
        read_exact(&mut r, &mut input)?;
        let mut mask_bytes = vec![0u8; len];
        read_exact(&mut r, &mut mask_bytes)?;
        let mask = mask_bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(DatasetError::BadMaskValue(other)),
            })
            .collect::<Result<Vec<bool>, _>>()?;
        out.push(DatasetExample { input, mask });
    }
    Ok(out)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<(), DatasetError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            DatasetError::Truncated
        } else {
            DatasetError::Io(e)
        }
    })
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N], DatasetError> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::crc_verify;

    fn prod() -> FrameGeometry {
        FrameGeometry::production()
    }

    #[test]
    fn vanishing_probability_leaves_frame_clean() {
        let clean = generate_frames(FrameKind::TelemetryLike, 1, prod(), 7).remove(0);
        let mut rng = Rng::substream(7, labels::CORRUPTION, 0);
        let ex = corrupt_frame(&clean, 1e-9, &mut rng).unwrap();
        assert_eq!(ex.input, clean);
        assert!(ex.mask.iter().all(|&m| !m));
    }

    #[test]
    fn corruption_rate_concentrates_near_p() {
        let clean = vec![0u8; 100_000];
        let mut rng = Rng::seeded(11);
        let ex = corrupt_frame(&clean, 0.02, &mut rng).unwrap();
        let hits = ex.mask.iter().filter(|&&m| m).count();
        let rate = hits as f64 / clean.len() as f64;
        assert!(
            (0.017..=0.023).contains(&rate),
            "corruption rate {rate} outside binomial concentration band"
        );
    }

    #[test]
    fn mask_marks_selection_not_visible_change() {
        // With p = 0.5 over enough zero bytes, some replacements must be
        // 0x00: the mask stays 1 there even though the byte is unchanged.
        let clean = vec![0u8; 4096];
        let mut rng = Rng::seeded(3);
        let ex = corrupt_frame(&clean, 0.5, &mut rng).unwrap();
        let invisible = ex
            .mask
            .iter()
            .zip(ex.input.iter())
            .filter(|&(&m, &b)| m && b == 0)
            .count();
        assert!(invisible > 0, "expected some masked-but-identical bytes");
    }

    #[test]
    fn degenerate_probabilities_rejected() {
        let mut rng = Rng::seeded(1);
        assert!(matches!(
            corrupt_frame(&[1, 2, 3], 0.0, &mut rng),
            Err(DatasetError::BadProbability(_))
        ));
        assert!(matches!(
            corrupt_frame(&[1, 2, 3], 1.0, &mut rng),
            Err(DatasetError::BadProbability(_))
        ));
    }

    #[test]
    fn replacement_bytes_are_uniform() {
        // Zero payload, p = 0.5: every masked byte equals the replacement
        // draw. Chi-square over 256 bins at 5 sigma.
        let clean = vec![0u8; 250_000];
        let mut rng = Rng::seeded(19);
        let ex = corrupt_frame(&clean, 0.5, &mut rng).unwrap();
        let mut hist = [0u64; 256];
        let mut draws = 0u64;
        for (i, &m) in ex.mask.iter().enumerate() {
            if m {
                hist[ex.input[i] as usize] += 1;
                draws += 1;
            }
        }
        assert!(draws > 100_000, "need at least 1e5 draws, got {draws}");
        let expected = draws as f64 / 256.0;
        let chi2: f64 = hist
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // df = 255; mean 255, sd sqrt(510) ≈ 22.6; 5 sigma ≈ 368.
        assert!(chi2 < 368.0, "chi-square statistic {chi2} too large");
    }

    #[test]
    fn dataset_build_is_deterministic() {
        let config = DatasetConfig {
            kind: FrameKind::Markov,
            count: 6,
            corruption_prob: 0.02,
            seed: 99,
        };
        let a = build_dataset(&config, prod()).unwrap();
        let b = build_dataset(&config, prod()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_ten_examples_is_eight_one_one() {
        let items: Vec<usize> = (0..10).collect();
        let (train, val, test) = split(&items).unwrap();
        assert_eq!(train, &items[..8]);
        assert_eq!(val, &[8]);
        assert_eq!(test, &[9]);
    }

    #[test]
    fn split_hundred_examples_boundaries() {
        let items: Vec<usize> = (0..100).collect();
        let (train, val, test) = split(&items).unwrap();
        assert_eq!((train.first(), train.last()), (Some(&0), Some(&79)));
        assert_eq!((val.first(), val.last()), (Some(&80), Some(&89)));
        assert_eq!((test.first(), test.last()), (Some(&90), Some(&99)));
    }

    #[test]
    fn split_preserves_order_and_partitions() {
        let items: Vec<u32> = (0..25).map(|i| i * 7 + 3).collect();
        let (train, val, test) = split(&items).unwrap();
        let rejoined: Vec<u32> = train
            .iter()
            .chain(val.iter())
            .chain(test.iter())
            .copied()
            .collect();
        assert_eq!(rejoined, items);
    }

    #[test]
    fn split_rejects_fewer_than_ten() {
        let items: Vec<u8> = (0..9).collect();
        assert!(matches!(
            split(&items),
            Err(DatasetError::TooFewExamples(9))
        ));
    }

    #[test]
    fn zero_count_yields_no_frames() {
        assert!(generate_frames(FrameKind::UniformRandom, 0, prod(), 1).is_empty());
    }

    #[test]
    fn uniform_frames_have_high_byte_entropy() {
        let frames = generate_frames(FrameKind::UniformRandom, 100, prod(), 5);
        let mut hist = [0u64; 256];
        let mut total = 0u64;
        for f in &frames {
            for &b in f {
                hist[b as usize] += 1;
                total += 1;
            }
        }
        let entropy: f64 = hist
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total as f64;
                -p * p.log2()
            })
            .sum();
        assert!(entropy > 7.9, "byte entropy {entropy} too low");
    }

    #[test]
    fn telemetry_frames_repeat_at_record_period() {
        let frames = generate_frames(FrameKind::TelemetryLike, 4, prod(), 21);
        let bytes: Vec<f64> = frames
            .iter()
            .flat_map(|f| f.iter().map(|&b| b as f64))
            .collect();
        let lag = TELEMETRY_RECORD_LEN;
        let mean = bytes.iter().sum::<f64>() / bytes.len() as f64;
        let var: f64 = bytes.iter().map(|x| (x - mean) * (x - mean)).sum();
        let cov: f64 = bytes
            .windows(lag + 1)
            .map(|w| (w[0] - mean) * (w[lag] - mean))
            .sum();
        let autocorr = cov / var;
        assert!(
            autocorr > 0.5,
            "lag-{lag} autocorrelation {autocorr} too weak"
        );
    }

    #[test]
    fn telemetry_sync_marker_every_record() {
        let frame = generate_frames(FrameKind::TelemetryLike, 1, prod(), 33).remove(0);
        for pos in (0..frame.len() - 2).step_by(TELEMETRY_RECORD_LEN) {
            assert_eq!(frame[pos], 0xA5, "missing sync marker at {pos}");
        }
    }

    #[test]
    fn markov_frames_follow_successor_map() {
        let frame = generate_frames(FrameKind::Markov, 1, prod(), 13).remove(0);
        let map = markov_successors();
        // Ignore the final two checksum bytes, which overwrite the chain.
        let body = &frame[..frame.len() - 2];
        let follows = body
            .windows(2)
            .filter(|w| map[w[0] as usize] == w[1])
            .count();
        let fraction = follows as f64 / (body.len() - 1) as f64;
        assert!(
            fraction > 0.6,
            "successor-map fraction {fraction} too low for break prob {DEFAULT_MARKOV_BREAK_PROB}"
        );
    }

    #[test]
    fn generated_payloads_carry_valid_checksums() {
        for kind in [
            FrameKind::UniformRandom,
            FrameKind::TelemetryLike,
            FrameKind::Markov,
        ] {
            for f in generate_frames(kind, 3, prod(), 17) {
                assert!(crc_verify(&f), "{kind} payload failed checksum");
            }
        }
    }

    #[test]
    fn dataset_file_round_trips() {
        let config = DatasetConfig {
            kind: FrameKind::TelemetryLike,
            count: 12,
            corruption_prob: 0.05,
            seed: 42,
        };
        let geometry = FrameGeometry::new(1, 15, 9).unwrap();
        let examples = build_dataset(&config, geometry).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.ersd");
        save_dataset(&path, &examples).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded, examples);
    }

    #[test]
    fn dataset_file_rejects_malformed_headers() {
        let dir = tempfile::tempdir().unwrap();

        let bad_magic = dir.path().join("bad_magic.ersd");
        std::fs::write(&bad_magic, b"NOPE\x01\x00\x04\x00\x00\x00").unwrap();
        assert!(matches!(
            load_dataset(&bad_magic),
            Err(DatasetError::BadMagic(_))
        ));

        let bad_version = dir.path().join("bad_version.ersd");
        let mut contents = Vec::new();
        contents.extend_from_slice(b"ERSD");
        contents.extend_from_slice(&2u16.to_le_bytes());
        contents.extend_from_slice(&4u32.to_le_bytes());
        contents.extend_from_slice(&0u64.to_le_bytes());
        std::fs::write(&bad_version, &contents).unwrap();
        assert!(matches!(
            load_dataset(&bad_version),
            Err(DatasetError::BadVersion(2))
        ));

        let examples = vec![DatasetExample {
            input: vec![1, 2, 3, 4],
            mask: vec![false, true, false, false],
        }];
        let truncated = dir.path().join("truncated.ersd");
        save_dataset(&truncated, &examples).unwrap();
        let full = std::fs::read(&truncated).unwrap();
        std::fs::write(&truncated, &full[..full.len() - 3]).unwrap();
        assert!(matches!(
            load_dataset(&truncated),
            Err(DatasetError::Truncated)
        ));
    }

    #[test]
    fn saving_empty_dataset_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.ersd");
        assert!(matches!(
            save_dataset(&path, &[]),
            Err(DatasetError::Empty)
        ));
    }

    #[test]
    fn frame_kind_strings_round_trip() {
        for kind in [
            FrameKind::UniformRandom,
            FrameKind::TelemetryLike,
            FrameKind::Markov,
        ] {
            assert_eq!(kind.name().parse::<FrameKind>().unwrap(), kind);
        }
        assert!(matches!(
            "csv".parse::<FrameKind>(),
            Err(DatasetError::BadKind(_))
        ));
    }
}
