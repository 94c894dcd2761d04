//! Command-line harness for the receiver-chain simulator: frame and
//! dataset generation, scorer training, single-point decoding, SNR sweeps,
//! and mis-correction analysis.
//!
//! Every run logs its resolved configuration (flags merged over the
//! optional `key = value` config file, over built-in defaults) to stderr,
//! keeping stdout clean for machine-readable output. Exit codes: 0 on
//! success, 1 for usage errors, 2 for runtime failures.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use erasure_chain::channel::{llr, sigma_for, transmit};
use erasure_chain::conv::{ConvCode, LlrFrame};
use erasure_chain::dataset::{
    build_dataset, generate_frame, generate_frames, load_dataset, save_dataset, split,
    DatasetConfig, FrameKind,
};
use erasure_chain::frame::FrameGeometry;
use erasure_chain::gf::{Field, FieldSpec};
use erasure_chain::model::{
    load_weights, save_weights, train, validation_auc, ModelConfig, TrainConfig,
};
use erasure_chain::pipeline::{
    decode_frame, encode_frame, ChainConfig, ErrorLocator, Mode, ModelLocator, OracleLocator,
    UniformLocator,
};
use erasure_chain::rng::{labels, Rng};
use erasure_chain::rs::{miscorrection_estimate, RsCode, CRC16_ACCEPT_FACTOR};
use erasure_chain::sweep::{
    default_snrs, information_rate, rows_to_csv, rows_to_svg, sweep, SweepConfig,
};

use config::{resolve, resolve_opt, resolve_required, FileConfig};

#[derive(Parser)]
#[command(
    name = "erasure-chain",
    version,
    about = "Simulation harness for a concatenated receiver chain with learned erasure marking"
)]
struct Cli {
    /// Flat `key = value` settings file; explicit flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate clean payload frames, one lowercase-hex line each
    GenFrames(GenFramesArgs),
    /// Generate a corrupted, labeled training dataset (.ersd)
    GenDataset(GenDatasetArgs),
    /// Train the corruption scorer; writes weights (.emw1) and a loss CSV
    Train(TrainArgs),
    /// Simulate noisy frames and decode them, one JSON report per line
    Decode(DecodeArgs),
    /// Compare decoding modes over an SNR grid; writes CSV and an SVG chart
    Sweep(SweepArgs),
    /// Print the block mis-correction probability estimate for an RS code
    Miscorrect(MiscorrectArgs),
}

#[derive(Args)]
struct GenFramesArgs {
    /// Payload generator: telemetry-like | uniform-random | markov
    #[arg(long)]
    kind: Option<String>,
    /// Number of frames to generate
    #[arg(long)]
    count: Option<usize>,
    /// Master seed for the content substreams
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Payload generator: telemetry-like | uniform-random | markov
    #[arg(long)]
    kind: Option<String>,
    /// Number of examples to generate
    #[arg(long)]
    count: Option<usize>,
    /// Per-byte substitution probability
    #[arg(long)]
    p: Option<f64>,
    /// Master seed for content and corruption substreams
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset file from gen-dataset
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Output weights file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss history CSV (default: `<out>.loss.csv`)
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    /// Training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Examples per optimizer step
    #[arg(long)]
    batch_size: Option<usize>,
    /// Seed for initialization, shuffling, and flag synthesis
    #[arg(long)]
    seed: Option<u64>,
    /// Embedding width
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Attention heads
    #[arg(long)]
    heads: Option<usize>,
    /// Transformer layers
    #[arg(long)]
    layers: Option<usize>,
    /// Feed-forward hidden width
    #[arg(long)]
    ff_dim: Option<usize>,
    /// Scoring window length in bytes
    #[arg(long)]
    context: Option<usize>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Eb/N0 in dB over the chain's information rate
    #[arg(long)]
    snr: Option<f64>,
    /// Frames to simulate
    #[arg(long)]
    frames: Option<usize>,
    /// baseline | pinning | pinning+ml | oracle-ml
    #[arg(long)]
    mode: Option<String>,
    /// Payload generator: telemetry-like | uniform-random | markov
    #[arg(long)]
    kind: Option<String>,
    /// Scorer weights (required for pinning+ml)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Master seed for payload and noise substreams
    #[arg(long)]
    seed: Option<u64>,
    /// Output file for the JSON lines (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated SNR points in dB (default: 1.0..4.0 step 0.25)
    #[arg(long)]
    snr: Option<String>,
    /// Frames per (SNR, mode) cell
    #[arg(long)]
    frames: Option<usize>,
    /// Comma-separated modes (default: baseline,pinning)
    #[arg(long)]
    modes: Option<String>,
    /// Payload generator: telemetry-like | uniform-random | markov
    #[arg(long)]
    kind: Option<String>,
    /// Scorer weights (required when modes include pinning+ml)
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Master seed for payload and noise substreams
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG chart file (default: the CSV path with an .svg extension)
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Skip the SVG chart
    #[arg(long)]
    no_svg: bool,
    #[command(flatten)]
    chain: ChainArgs,
}

#[derive(Args)]
struct MiscorrectArgs {
    /// Code length in symbols
    #[arg(long)]
    n: Option<usize>,
    /// Message length in symbols
    #[arg(long)]
    k: Option<usize>,
    /// Erasures handed to the decoder
    #[arg(long)]
    f: Option<usize>,
    /// First consecutive root of the generator polynomial
    #[arg(long)]
    fcr: Option<usize>,
}

/// Decoding-loop knobs shared by `decode` and `sweep`.
#[derive(Args)]
struct ChainArgs {
    /// First erasure count tried per block
    #[arg(long)]
    n_start: Option<usize>,
    /// Erasure schedule increment
    #[arg(long)]
    n_step: Option<usize>,
    /// Erasure budget cap per block
    #[arg(long)]
    n_max: Option<usize>,
    /// Decode/pin/re-decode iteration cap
    #[arg(long)]
    max_iterations: Option<usize>,
    /// LLR magnitude used for pinned bits
    #[arg(long)]
    pin_magnitude: Option<f64>,
    /// Disable payload checksum gating
    #[arg(long)]
    no_crc: bool,
    /// Re-score the stale payload before each Viterbi pass
    #[arg(long)]
    rescore_before_viterbi: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version surface as "errors" here but exit 0;
            // genuine usage problems print usage text and exit 1.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    match cli.command {
        Command::GenFrames(args) => cmd_gen_frames(args, &file),
        Command::GenDataset(args) => cmd_gen_dataset(args, &file),
        Command::Train(args) => cmd_train(args, &file),
        Command::Decode(args) => cmd_decode(args, &file),
        Command::Sweep(args) => cmd_sweep(args, &file),
        Command::Miscorrect(args) => cmd_miscorrect(args, &file),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn log_config(command: &str, entries: &[(&str, String)]) {
    eprintln!("# {command} resolved configuration:");
    for (key, value) in entries {
        eprintln!("#   {key} = {value}");
    }
}

fn parse_kind(s: &str) -> Result<FrameKind> {
    s.parse().map_err(|e| anyhow!("{e}"))
}

fn parse_mode(s: &str) -> Result<Mode> {
    s.parse().map_err(|e| anyhow!("{e}"))
}

fn parse_mode_list(s: &str) -> Result<Vec<Mode>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_mode)
        .collect()
}

fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| anyhow!("bad SNR value {t:?}: {e}"))
        })
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn describe_out(out: &Option<PathBuf>) -> String {
    out.as_ref()
        .map_or_else(|| "(stdout)".to_string(), |p| p.display().to_string())
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout()
            .write_all(bytes)
            .context("writing to stdout"),
    }
}

fn to_hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn resolve_chain(args: &ChainArgs, file: &FileConfig, mode: Mode) -> Result<ChainConfig> {
    let d = ChainConfig::default();
    Ok(ChainConfig {
        mode,
        n_start: resolve(args.n_start, file, "n-start", d.n_start)?,
        n_step: resolve(args.n_step, file, "n-step", d.n_step)?,
        n_max: resolve(args.n_max, file, "n-max", d.n_max)?,
        max_iterations: resolve(args.max_iterations, file, "max-iterations", d.max_iterations)?,
        pin_magnitude: resolve(args.pin_magnitude, file, "pin-magnitude", d.pin_magnitude)?,
        crc_enabled: if args.no_crc {
            false
        } else {
            resolve(None, file, "crc-enabled", d.crc_enabled)?
        },
        rescore_before_viterbi: if args.rescore_before_viterbi {
            true
        } else {
            resolve(None, file, "rescore-before-viterbi", d.rescore_before_viterbi)?
        },
    })
}

fn chain_entries(chain: &ChainConfig) -> Vec<(&'static str, String)> {
    vec![
        ("n-start", chain.n_start.to_string()),
        ("n-step", chain.n_step.to_string()),
        ("n-max", chain.n_max.to_string()),
        ("max-iterations", chain.max_iterations.to_string()),
        ("pin-magnitude", format!("{:e}", chain.pin_magnitude)),
        ("crc-enabled", chain.crc_enabled.to_string()),
        (
            "rescore-before-viterbi",
            chain.rescore_before_viterbi.to_string(),
        ),
    ]
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_gen_frames(args: GenFramesArgs, file: &FileConfig) -> Result<()> {
    let kind = parse_kind(&resolve(args.kind, file, "kind", "telemetry-like".into())?)?;
    let count = resolve(args.count, file, "count", 100)?;
    let seed = resolve(args.seed, file, "seed", 0)?;
    let out = resolve_opt(args.out, file, "out")?;
    log_config(
        "gen-frames",
        &[
            ("kind", kind.to_string()),
            ("count", count.to_string()),
            ("seed", seed.to_string()),
            ("out", describe_out(&out)),
        ],
    );

    let geometry = FrameGeometry::production();
    let frames = generate_frames(kind, count, geometry, seed);
    let mut text = String::with_capacity(count * (geometry.payload_bytes() * 2 + 1));
    for frame in &frames {
        text.push_str(&to_hex(frame));
        text.push('\n');
    }
    write_output(out.as_deref(), text.as_bytes())?;
    eprintln!("# generated {count} frames of {} bytes", geometry.payload_bytes());
    Ok(())
}

fn cmd_gen_dataset(args: GenDatasetArgs, file: &FileConfig) -> Result<()> {
    let kind = parse_kind(&resolve(args.kind, file, "kind", "telemetry-like".into())?)?;
    let count = resolve(args.count, file, "count", 500)?;
    let p = resolve(args.p, file, "p", 0.02)?;
    let seed = resolve(args.seed, file, "seed", 1)?;
    let out: PathBuf = resolve_required(args.out, file, "out")?;
    log_config(
        "gen-dataset",
        &[
            ("kind", kind.to_string()),
            ("count", count.to_string()),
            ("p", p.to_string()),
            ("seed", seed.to_string()),
            ("out", out.display().to_string()),
        ],
    );

    let dataset_config = DatasetConfig { kind, count, corruption_prob: p, seed };
    let examples = build_dataset(&dataset_config, FrameGeometry::production())?;
    save_dataset(&out, &examples)?;
    eprintln!("# wrote {} examples to {}", examples.len(), out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> Result<()> {
    let dataset: PathBuf = resolve_required(args.dataset, file, "dataset")?;
    let out: PathBuf = resolve_required(args.out, file, "out")?;
    let loss_csv = match resolve_opt(args.loss_csv, file, "loss-csv")? {
        Some(path) => path,
        None => {
            let mut os = out.as_os_str().to_owned();
            os.push(".loss.csv");
            PathBuf::from(os)
        }
    };
    let md = ModelConfig::default();
    let model_config = ModelConfig {
        embed_dim: resolve(args.embed_dim, file, "embed-dim", md.embed_dim)?,
        heads: resolve(args.heads, file, "heads", md.heads)?,
        layers: resolve(args.layers, file, "layers", md.layers)?,
        ff_dim: resolve(args.ff_dim, file, "ff-dim", md.ff_dim)?,
        context: resolve(args.context, file, "context", md.context)?,
        ..md
    };
    let td = TrainConfig::default();
    let train_config = TrainConfig {
        lr: resolve(args.lr, file, "lr", td.lr)?,
        batch_size: resolve(args.batch_size, file, "batch-size", td.batch_size)?,
        epochs: resolve(args.epochs, file, "epochs", td.epochs)?,
        seed: resolve(args.seed, file, "seed", td.seed)?,
        ..td
    };
    log_config(
        "train",
        &[
            ("dataset", dataset.display().to_string()),
            ("out", out.display().to_string()),
            ("loss-csv", loss_csv.display().to_string()),
            ("epochs", train_config.epochs.to_string()),
            ("lr", train_config.lr.to_string()),
            ("batch-size", train_config.batch_size.to_string()),
            ("seed", train_config.seed.to_string()),
            ("embed-dim", model_config.embed_dim.to_string()),
            ("heads", model_config.heads.to_string()),
            ("layers", model_config.layers.to_string()),
            ("ff-dim", model_config.ff_dim.to_string()),
            ("context", model_config.context.to_string()),
        ],
    );

    let examples = load_dataset(&dataset)?;
    let (train_set, val_set, _test_set) = split(&examples)?;
    eprintln!(
        "# training on {} examples, validating on {}",
        train_set.len(),
        val_set.len()
    );
    let (params, losses) = train(train_set, &model_config, &train_config)?;
    save_weights(&out, &params)?;

    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in losses.iter().enumerate() {
        let _ = writeln!(csv, "{},{loss:.6}", epoch + 1);
    }
    fs::write(&loss_csv, csv).with_context(|| format!("writing {}", loss_csv.display()))?;

    let auc = validation_auc(&params, val_set, &FrameGeometry::production())?;
    eprintln!(
        "# wrote weights to {} and loss history to {}",
        out.display(),
        loss_csv.display()
    );
    println!("validation_auc = {auc:.4}");
    Ok(())
}

fn cmd_decode(args: DecodeArgs, file: &FileConfig) -> Result<()> {
    let snr = resolve_required(args.snr, file, "snr")?;
    let frames = resolve(args.frames, file, "frames", 10)?;
    let mode = parse_mode(&resolve(args.mode, file, "mode", "pinning".into())?)?;
    let kind = parse_kind(&resolve(args.kind, file, "kind", "telemetry-like".into())?)?;
    let seed = resolve(args.seed, file, "seed", 0)?;
    let weights = resolve_opt::<PathBuf>(args.weights, file, "weights")?;
    let out = resolve_opt(args.out, file, "out")?;
    let chain = resolve_chain(&args.chain, file, mode)?;

    let mut entries = vec![
        ("snr", snr.to_string()),
        ("frames", frames.to_string()),
        ("mode", mode.to_string()),
        ("kind", kind.to_string()),
        ("seed", seed.to_string()),
        (
            "weights",
            weights
                .as_ref()
                .map_or_else(|| "(none)".to_string(), |p| p.display().to_string()),
        ),
        ("out", describe_out(&out)),
    ];
    entries.extend(chain_entries(&chain));
    log_config("decode", &entries);

    let rs = RsCode::production();
    let conv = ConvCode::standard();
    let geometry = FrameGeometry::production();
    let uniform = UniformLocator;
    let ml = match (mode, &weights) {
        (Mode::PinningMl, Some(path)) => Some(ModelLocator::new(load_weights(path)?, geometry)),
        (Mode::PinningMl, None) => bail!("mode pinning+ml needs --weights"),
        _ => None,
    };
    let rate = information_rate(&geometry, &conv, chain.crc_enabled);
    let sigma = sigma_for(snr, rate);

    let mut lines = String::new();
    for i in 0..frames as u64 {
        let mut content_rng = Rng::substream(seed, labels::FRAME_CONTENT, i);
        let payload = generate_frame(kind, geometry, &mut content_rng);
        let coded = encode_frame(&payload, &rs, &conv, &geometry)?;
        let mut noise_rng = Rng::substream(seed, labels::CHANNEL_NOISE, i);
        let samples = transmit(&coded, sigma, &mut noise_rng);
        let llrs = LlrFrame::new(llr(&samples, sigma), &conv)?;
        let oracle;
        let locator: &dyn ErrorLocator = match mode {
            Mode::Baseline | Mode::Pinning => &uniform,
            Mode::PinningMl => ml.as_ref().expect("checked above"),
            Mode::OracleMl => {
                oracle = OracleLocator::new(payload.clone());
                &oracle
            }
        };
        let mut report = decode_frame(&llrs, locator, &chain, &rs, &conv, &geometry)?;
        report.finalize_with_truth(&payload, &geometry);
        lines.push_str(&serde_json::to_string(&report)?);
        lines.push('\n');
    }
    write_output(out.as_deref(), lines.as_bytes())?;
    eprintln!("# decoded {frames} frames at {snr} dB ({mode})");
    Ok(())
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig) -> Result<()> {
    let snrs_db = match resolve_opt::<String>(args.snr, file, "snr")? {
        Some(list) => parse_snr_list(&list)?,
        None => default_snrs(),
    };
    let frames = resolve(args.frames, file, "frames", 200)?;
    let modes = match resolve_opt::<String>(args.modes, file, "modes")? {
        Some(list) => parse_mode_list(&list)?,
        None => vec![Mode::Baseline, Mode::Pinning],
    };
    let kind = parse_kind(&resolve(args.kind, file, "kind", "telemetry-like".into())?)?;
    let seed = resolve(args.seed, file, "seed", 0)?;
    let weights_path = resolve_opt::<PathBuf>(args.weights, file, "weights")?;
    let out = resolve_opt::<PathBuf>(args.out, file, "out")?;
    let svg = resolve_opt::<PathBuf>(args.svg, file, "svg")?;
    let no_svg = args.no_svg || resolve(None, file, "no-svg", false)?;
    let chain = resolve_chain(&args.chain, file, Mode::Baseline)?;

    let mut entries = vec![
        ("snr", join(&snrs_db)),
        ("frames", frames.to_string()),
        ("modes", join(&modes)),
        ("kind", kind.to_string()),
        ("seed", seed.to_string()),
        (
            "weights",
            weights_path
                .as_ref()
                .map_or_else(|| "(none)".to_string(), |p| p.display().to_string()),
        ),
        ("out", describe_out(&out)),
    ];
    entries.extend(chain_entries(&chain));
    log_config("sweep", &entries);

    let weights = weights_path.as_deref().map(load_weights).transpose()?;
    let sweep_config = SweepConfig {
        snrs_db,
        frames,
        modes,
        kind,
        chain,
        seed,
        weights,
    };
    let rs = RsCode::production();
    let conv = ConvCode::standard();
    let geometry = FrameGeometry::production();
    let rows = sweep(&sweep_config, &rs, &conv, &geometry)?;
    let csv = rows_to_csv(&rows);
    write_output(out.as_deref(), csv.as_bytes())?;
    if let Some(path) = &out {
        eprintln!("# wrote {} rows to {}", rows.len(), path.display());
    }

    let svg_target = match (&out, svg) {
        (_, Some(path)) => Some(path),
        (Some(csv_path), None) => Some(csv_path.with_extension("svg")),
        (None, None) => None,
    };
    if let (false, Some(path)) = (no_svg, svg_target) {
        fs::write(&path, rows_to_svg(&rows))
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("# wrote chart to {}", path.display());
    }
    Ok(())
}

fn cmd_miscorrect(args: MiscorrectArgs, file: &FileConfig) -> Result<()> {
    let n = resolve(args.n, file, "n", 255)?;
    let k = resolve(args.k, file, "k", 223)?;
    let f = resolve_required(args.f, file, "f")?;
    let fcr = resolve(args.fcr, file, "fcr", 1)?;
    log_config(
        "miscorrect",
        &[
            ("n", n.to_string()),
            ("k", k.to_string()),
            ("f", f.to_string()),
            ("fcr", fcr.to_string()),
        ],
    );

    // Pick the smallest supported symbol field that fits the code length.
    let spec = if n <= FieldSpec::GF16.order() {
        FieldSpec::GF16
    } else if n <= FieldSpec::GF256.order() {
        FieldSpec::GF256
    } else {
        bail!("n = {n} exceeds the largest supported field (order 255)");
    };
    let field = Field::build(spec)?;
    let code = RsCode::new(field, n, k, fcr)?;
    if f > code.parity_len() {
        bail!(
            "f = {f} exceeds the parity budget {} of rs({n},{k})",
            code.parity_len()
        );
    }
    let estimate = miscorrection_estimate(&code, f);
    println!("rs({n},{k}) fcr={fcr} erasures={f}");
    println!("miscorrection_estimate = {estimate:.6e}");
    println!("with_crc16_gate = {:.6e}", estimate * CRC16_ACCEPT_FACTOR);
    Ok(())
}
