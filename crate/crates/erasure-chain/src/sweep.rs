//! Monte Carlo sweeps over SNR points and decoding modes, with paired
//! randomness, CSV serialization, and a small self-contained SVG chart.
//!
//! Pairing: frame `i` draws its payload from the substream
//! `(seed, FRAME_CONTENT, i)` and its noise from `(seed, CHANNEL_NOISE, i)`.
//! Neither key involves the SNR point or the decoding mode, so every mode
//! at a point decodes the same noisy frames (a paired comparison), and the
//! points of a curve share common random numbers: moving the SNR rescales
//! the same underlying Gaussian draws instead of resampling them.
//!
//! Error attribution: a frame counts as a frame error when its recovered
//! payload differs from the transmitted one (`exact_match == false`), even
//! if the decoder reported success — that combination is a mis-correction
//! that slipped past the gates, and it additionally increments the row's
//! `miscorrections_flagged`. Bit errors are payload bit flips between the
//! recovered and transmitted payloads.

use std::env;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{llr, sigma_for, transmit};
use crate::conv::{ConvCode, LlrFrame};
use crate::dataset::{generate_frame, FrameKind};
use crate::frame::FrameGeometry;
use crate::model::ModelParams;
use crate::pipeline::{
    decode_frame, encode_frame, ChainConfig, ErrorLocator, Mode, ModelLocator, OracleLocator,
    PipelineError, UniformLocator,
};
use crate::rng::{labels, Rng};
use crate::rs::RsCode;

/// Environment variable capping the worker threads a sweep may use.
/// Unset means rayon's default; the value must be a positive integer.
pub const THREADS_ENV: &str = "ERASURE_CHAIN_THREADS";

/// Exact header line of the sweep CSV format.
pub const CSV_HEADER: &str = "snr_db,mode,frames,frame_errors,bit_errors,bits,ber,fer,\
mean_iterations,mean_erasures_used,miscorrections_flagged";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least one SNR point")]
    EmptySnrList,
    #[error("sweep needs at least one frame per point")]
    ZeroFrames,
    #[error("sweep needs at least one decoding mode")]
    NoModes,
    #[error("mode {0} needs model weights, but none were provided")]
    MissingWeights(Mode),
    #[error("checksum gating needs byte-sized symbols; disable it for sub-byte fields")]
    CrcNeedsByteField,
    #[error("{THREADS_ENV} must be a positive integer, got {0:?}")]
    BadThreadCount(String),
    #[error("could not build the worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Full description of one sweep run.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// SNR points in dB (Eb/N0 over the chain's information rate).
    pub snrs_db: Vec<f64>,
    /// Frames simulated per (SNR, mode) cell.
    pub frames: usize,
    /// Decoding modes compared at every point.
    pub modes: Vec<Mode>,
    /// Payload generator for the clean frames.
    pub kind: FrameKind,
    /// Chain settings shared by every mode; its `mode` field is overridden
    /// per run.
    pub chain: ChainConfig,
    /// Master seed for payload and noise substreams.
    pub seed: u64,
    /// Scorer weights, required whenever `modes` includes the learned
    /// locator.
    pub weights: Option<ModelParams>,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            snrs_db: default_snrs(),
            frames: 200,
            modes: vec![Mode::Baseline, Mode::Pinning],
            kind: FrameKind::TelemetryLike,
            chain: ChainConfig::default(),
            seed: 0,
            weights: None,
        }
    }
}

/// Default SNR grid: 1.0 dB to 4.0 dB in 0.25 dB steps, a span chosen to
/// bracket the production chain's waterfall region.
pub fn default_snrs() -> Vec<f64> {
    (0..=12).map(|i| 1.0 + 0.25 * i as f64).collect()
}

/// Information rate of the full chain: payload information bits (excluding
/// the check sequence when it is enabled) per transmitted channel bit,
/// counting the convolutional flush tail.
pub fn information_rate(geometry: &FrameGeometry, conv: &ConvCode, crc_enabled: bool) -> f64 {
    let crc_bytes = if crc_enabled && geometry.payload_bytes() >= 2 { 2 } else { 0 };
    let info_bits = (geometry.payload_bytes() - crc_bytes) * 8;
    let coded_bits = (geometry.code_bytes() * 8 + conv.memory()) * 2;
    info_bits as f64 / coded_bits as f64
}

/// One aggregated (SNR, mode) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub mode: Mode,
    pub frames: usize,
    pub frame_errors: usize,
    pub bit_errors: usize,
    /// Payload bits simulated: `frames * payload_bytes * 8`.
    pub bits: usize,
    pub ber: f64,
    pub fer: f64,
    pub mean_iterations: f64,
    /// Erasures supplied per accepted block decode, averaged over the cell
    /// (0 when nothing was decoded).
    pub mean_erasures_used: f64,
    /// Frames whose payload mismatch involved a mis-corrected block.
    pub miscorrections_flagged: usize,
}

impl SweepRow {
    fn csv_line(&self) -> String {
        format!(
            "{:.2},{},{},{},{},{},{:.6e},{:.6e},{:.4},{:.4},{}",
            self.snr_db,
            self.mode,
            self.frames,
            self.frame_errors,
            self.bit_errors,
            self.bits,
            self.ber,
            self.fer,
            self.mean_iterations,
            self.mean_erasures_used,
            self.miscorrections_flagged,
        )
    }
}

/// Serializes rows in order under the fixed header. Output is a pure
/// function of the rows, so reruns of a deterministic sweep are
/// byte-identical.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Per-frame, per-mode outcome extracted from a decode report.
struct FrameOutcome {
    frame_error: bool,
    bit_errors: usize,
    iterations: usize,
    erasures: usize,
    decoded_blocks: usize,
    miscorrection: bool,
}

/// Runs the full grid and returns one row per (SNR, mode), SNR-major in
/// the order given. Frames parallelize across workers; aggregation order
/// is fixed, so results do not depend on the thread count.
pub fn sweep(
    cfg: &SweepConfig,
    rs: &RsCode,
    conv: &ConvCode,
    geometry: &FrameGeometry,
) -> Result<Vec<SweepRow>, SweepError> {
    if cfg.snrs_db.is_empty() {
        return Err(SweepError::EmptySnrList);
    }
    if cfg.frames == 0 {
        return Err(SweepError::ZeroFrames);
    }
    if cfg.modes.is_empty() {
        return Err(SweepError::NoModes);
    }
    cfg.chain.validate(rs)?;
    if let Some(&mode) = cfg
        .modes
        .iter()
        .find(|&&m| m == Mode::PinningMl && cfg.weights.is_none())
    {
        return Err(SweepError::MissingWeights(mode));
    }
    if cfg.chain.crc_enabled && rs.field().size() < 256 {
        return Err(SweepError::CrcNeedsByteField);
    }

    let uniform = UniformLocator;
    let ml = cfg
        .weights
        .clone()
        .map(|params| ModelLocator::new(params, *geometry));
    let rate = information_rate(geometry, conv, cfg.chain.crc_enabled);
    let payload_bits = geometry.payload_bytes() * 8;
    let pool = build_pool()?;

    let mut rows = Vec::with_capacity(cfg.snrs_db.len() * cfg.modes.len());
    for &snr_db in &cfg.snrs_db {
        let sigma = sigma_for(snr_db, rate);
        let per_frame: Result<Vec<Vec<FrameOutcome>>, SweepError> = pool.install(|| {
            (0..cfg.frames)
                .into_par_iter()
                .map(|i| run_frame(i as u64, sigma, cfg, rs, conv, geometry, &uniform, ml.as_ref()))
                .collect()
        });
        let per_frame = per_frame?;

        for (m, &mode) in cfg.modes.iter().enumerate() {
            let cell = per_frame.iter().map(|outcomes| &outcomes[m]);
            let frame_errors = cell.clone().filter(|o| o.frame_error).count();
            let bit_errors: usize = cell.clone().map(|o| o.bit_errors).sum();
            let iterations: usize = cell.clone().map(|o| o.iterations).sum();
            let erasures: usize = cell.clone().map(|o| o.erasures).sum();
            let decoded_blocks: usize = cell.clone().map(|o| o.decoded_blocks).sum();
            let miscorrections_flagged = cell.clone().filter(|o| o.miscorrection).count();
            let bits = cfg.frames * payload_bits;
            rows.push(SweepRow {
                snr_db,
                mode,
                frames: cfg.frames,
                frame_errors,
                bit_errors,
                bits,
                ber: bit_errors as f64 / bits as f64,
                fer: frame_errors as f64 / cfg.frames as f64,
                mean_iterations: iterations as f64 / cfg.frames as f64,
                mean_erasures_used: if decoded_blocks == 0 {
                    0.0
                } else {
                    erasures as f64 / decoded_blocks as f64
                },
                miscorrections_flagged,
            });
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_frame(
    index: u64,
    sigma: f64,
    cfg: &SweepConfig,
    rs: &RsCode,
    conv: &ConvCode,
    geometry: &FrameGeometry,
    uniform: &UniformLocator,
    ml: Option<&ModelLocator>,
) -> Result<Vec<FrameOutcome>, SweepError> {
    let mut content_rng = Rng::substream(cfg.seed, labels::FRAME_CONTENT, index);
    let mut payload = generate_frame(cfg.kind, *geometry, &mut content_rng);
    // Sub-byte codes carry sub-byte symbols; the generator draws full
    // bytes, so project them into the field (a no-op for GF(256)).
    let mask = (rs.field().size() - 1) as u8;
    if mask != u8::MAX {
        for byte in &mut payload {
            *byte &= mask;
        }
    }
    let coded = encode_frame(&payload, rs, conv, geometry)?;
    let mut noise_rng = Rng::substream(cfg.seed, labels::CHANNEL_NOISE, index);
    let samples = transmit(&coded, sigma, &mut noise_rng);
    let llrs = LlrFrame::new(llr(&samples, sigma), conv).map_err(PipelineError::from)?;

    cfg.modes
        .iter()
        .map(|&mode| {
            let chain = ChainConfig { mode, ..cfg.chain.clone() };
            let oracle;
            let locator: &dyn ErrorLocator = match mode {
                Mode::Baseline | Mode::Pinning => uniform,
                Mode::PinningMl => ml.expect("weights checked before the sweep started"),
                Mode::OracleMl => {
                    oracle = OracleLocator::new(payload.clone());
                    &oracle
                }
            };
            let mut report = decode_frame(&llrs, locator, &chain, rs, conv, geometry)?;
            report.finalize_with_truth(&payload, geometry);
            let exact = report.exact_match.unwrap_or(false);
            Ok(FrameOutcome {
                frame_error: !exact,
                bit_errors: report.bit_errors.unwrap_or(payload.len() * 8),
                iterations: report.iterations,
                erasures: report.erasures_total,
                decoded_blocks: report.decoded_blocks,
                miscorrection: !exact && !report.miscorrected_blocks.is_empty(),
            })
        })
        .collect()
}

fn build_pool() -> Result<rayon::ThreadPool, SweepError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = env::var(THREADS_ENV) {
        let threads: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| SweepError::BadThreadCount(raw.clone()))?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| SweepError::ThreadPool(e.to_string()))
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

const SVG_W: f64 = 700.0;
const SVG_H: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 50.0;

fn mode_color(mode: Mode) -> &'static str {
    match mode {
        Mode::Baseline => "#1f77b4",
        Mode::Pinning => "#ff7f0e",
        Mode::PinningMl => "#2ca02c",
        Mode::OracleMl => "#d62728",
    }
}

/// Renders a self-contained SVG line chart of BER versus SNR, one polyline
/// per mode, with a log-scale BER axis. Zero-BER cells cannot be placed on
/// a log axis and are omitted from their polyline; a mode whose every cell
/// is error-free contributes only a legend entry.
pub fn rows_to_svg(rows: &[SweepRow]) -> String {
    let mut modes: Vec<Mode> = Vec::new();
    for row in rows {
        if !modes.contains(&row.mode) {
            modes.push(row.mode);
        }
    }

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut b_min, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        x_min = x_min.min(row.snr_db);
        x_max = x_max.max(row.snr_db);
        if row.ber > 0.0 {
            b_min = b_min.min(row.ber);
            b_max = b_max.max(row.ber);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    // Log-axis bounds snapped to decades; a safe default when every cell
    // was error-free.
    let (y_lo_exp, y_hi_exp) = if b_min.is_finite() {
        let lo = b_min.log10().floor() as i32;
        let hi = b_max.log10().ceil() as i32;
        if lo == hi { (lo - 1, hi) } else { (lo, hi) }
    } else {
        (-6, 0)
    };

    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let px = |snr: f64| MARGIN_L + plot_w * (snr - x_min) / (x_max - x_min);
    let py = |ber: f64| {
        let span = (y_hi_exp - y_lo_exp) as f64;
        MARGIN_T + plot_h * (y_hi_exp as f64 - ber.log10()) / span
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"#ffffff\"/>"
    );

    // Horizontal decade gridlines and labels.
    for exp in y_lo_exp..=y_hi_exp {
        let y = py(10f64.powi(exp));
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>",
            MARGIN_L,
            MARGIN_L + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{exp}</text>",
            MARGIN_L - 8.0,
            y + 4.0
        );
    }

    // X ticks: every distinct SNR, thinned if the grid is dense.
    let mut snrs: Vec<f64> = Vec::new();
    for row in rows {
        if !snrs.iter().any(|&s| (s - row.snr_db).abs() < 1e-12) {
            snrs.push(row.snr_db);
        }
    }
    snrs.sort_by(|a, b| a.partial_cmp(b).expect("snr points are finite"));
    let stride = snrs.len().div_ceil(10).max(1);
    for (i, &snr) in snrs.iter().enumerate() {
        if i % stride != 0 && i + 1 != snrs.len() {
            continue;
        }
        let x = px(snr);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>",
            MARGIN_T,
            MARGIN_T + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{snr:.2}</text>",
            MARGIN_T + plot_h + 18.0
        );
    }

    // Axes.
    let _ = write!(
        svg,
        "<line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"#333333\"/>\n\
<line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"#333333\"/>\n",
        l = MARGIN_L,
        t = MARGIN_T,
        b = MARGIN_T + plot_h,
        r = MARGIN_L + plot_w
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">Eb/N0 (dB)</text>",
        MARGIN_L + plot_w / 2.0,
        SVG_H - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">BER</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    );

    // One series per mode.
    for &mode in &modes {
        let color = mode_color(mode);
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.mode == mode && r.ber > 0.0)
            .map(|r| (px(r.snr_db), py(r.ber)))
            .collect();
        if points.len() >= 2 {
            let path: Vec<String> = points
                .iter()
                .map(|(x, y)| format!("{x:.1},{y:.1}"))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        for (x, y) in &points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"3\" fill=\"{color}\"/>"
            );
        }
    }

    // Legend.
    let legend_x = MARGIN_L + plot_w + 16.0;
    for (i, &mode) in modes.iter().enumerate() {
        let y = MARGIN_T + 14.0 + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{legend_x:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
stroke=\"{}\" stroke-width=\"2\"/>",
            y - 4.0,
            legend_x + 24.0,
            y - 4.0,
            mode_color(mode)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{y:.1}\">{mode}</text>",
            legend_x + 30.0
        );
    }

    svg.push_str("</svg>\n");
    svg
}
