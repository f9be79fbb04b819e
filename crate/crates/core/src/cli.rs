//! The `mshidden` command line. Lives in the library so it can be driven
//! in-process; the binary only forwards `std::env::args`.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 integrity error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::codec::{embed_message, ensure_lossless, extract_message, read_image, write_image, DEFAULT_FILLER_SEED};
use crate::error::Error;
use crate::metrics::sweep::{parse_seeds, parse_spec, SpecError, SweepSpec};
use crate::metrics::{bench, psnr, sweep, BenchOptions};
use crate::model::capacity::param_count_from_specs;
use crate::model::{bits_per_pixel, feature_capacity, model_complexity, ModelConfig, DEFAULT_SEED};
use crate::train::{load_checkpoint, train, CheckpointError, Dataset, TrainOutputs, TrainRun};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mshidden", version, about = "Hide byte messages in images with a multi-scale autoencoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train embedder, extractor and discriminator on a directory of images.
    Train(TrainArgs),
    /// Hide a message in a cover image.
    Embed(EmbedArgs),
    /// Recover a message from a stego image.
    Extract(ExtractArgs),
    /// Measure BER and distortion of a model over a directory of images.
    Bench(BenchArgs),
    /// Train and benchmark one model per (B, k, |M|) tuple and seed.
    Sweep(SweepArgs),
    /// Print a checkpoint's configuration, size and integrity.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory of training images (PNG, PPM or JPEG).
    #[arg(long)]
    data: PathBuf,
    /// Best checkpoint; the final one and the CSV log are written beside it.
    #[arg(long)]
    out: PathBuf,
    /// Block size B.
    #[arg(long, default_value_t = 128)]
    block: usize,
    /// Downsampling depth k.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Message bits per block |M|.
    #[arg(long, default_value_t = 64)]
    msg_bits: usize,
    #[arg(long, default_value_t = 150)]
    epochs: usize,
    #[arg(long, default_value_t = 30)]
    batch: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f32,
    /// Seed for initialization, batch order, crops and messages.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    lambda_i: f32,
    #[arg(long, default_value_t = 1.5)]
    lambda_m: f32,
    #[arg(long, default_value_t = 0.001)]
    lambda_g: f32,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("msg").required(true).args(["message", "message_file"])))]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    cover: PathBuf,
    /// Text to hide, UTF-8 encoded.
    #[arg(long)]
    message: Option<String>,
    /// File whose raw bytes are hidden.
    #[arg(long)]
    message_file: Option<PathBuf>,
    /// Stego output, .png or .ppm.
    #[arg(long)]
    out: PathBuf,
    /// Seed for the filler bits of unused blocks.
    #[arg(long, default_value_t = DEFAULT_FILLER_SEED)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    stego: PathBuf,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Random messages per image.
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// JSON report path.
    #[arg(long)]
    report: PathBuf,
    /// Also write |C − C'|×15 difference images here.
    #[arg(long)]
    diff_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    /// Tuples "B,k,M;B,k,M;...".
    #[arg(long)]
    spec: String,
    /// Training steps per model.
    #[arg(long, default_value_t = 1000)]
    budget_steps: usize,
    /// Comma-separated seeds; every tuple is trained once per seed.
    #[arg(long, default_value = "1,2,3")]
    seeds: String,
    /// JSON report path.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        Failure::Run(e.into())
    }
}

/// Integrity failures (checkpoint or frame) map to 3, everything else to 2.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Checkpoint(CheckpointError::Io { .. }) => EXIT_DATA,
        Error::Checkpoint(_) | Error::Frame(_) => EXIT_INTEGRITY,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Embed(a) => cmd_embed(a, out, err),
        Command::Extract(a) => cmd_extract(a, out, err),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = ModelConfig::new(a.block, a.k, a.msg_bits)?.with_seed(a.seed);
    cfg.lambda_i = a.lambda_i;
    cfg.lambda_m = a.lambda_m;
    cfg.lambda_g = a.lambda_g;
    cfg.adam.lr = a.lr;
    cfg.validate()?;
    let run = TrainRun {
        cfg,
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
    };
    run.validate()?;
    let data = if a.epochs == 0 {
        Dataset::default()
    } else {
        Dataset::from_dir(&a.data, a.block)?
    };
    if a.epochs > 0 && data.len() < a.batch {
        return Err(Error::Dataset(format!("dataset smaller than batch: {} images, batch size {}", data.len(), a.batch)).into());
    }
    let outputs = TrainOutputs::beside(&a.out);
    let result = train(&run, &data, Some(&outputs), |r| {
        let _ = writeln!(
            out,
            "epoch {:>4}  E {:.5}  L_I {:.5}  L_M {:.5}  L_G {:.5}  val BER {:.6}  val PSNR {:.2} dB",
            r.epoch, r.total, r.image, r.message, r.adversarial, r.val.ber, r.val.psnr_db
        );
    })?;
    writeln!(out, "best checkpoint  {}", outputs.best.display())?;
    writeln!(out, "final checkpoint {}", outputs.last.display())?;
    writeln!(out, "metrics log      {}", outputs.log.display())?;
    match result.history.last() {
        Some(r) => writeln!(out, "final val BER {:.6}  val PSNR {:.2} dB", r.val.ber, r.val.psnr_db)?,
        None => writeln!(out, "no epochs run; checkpoint holds the untrained model")?,
    }
    Ok(())
}

fn cmd_embed(a: EmbedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    ensure_lossless(&a.out)?;
    let ckpt = load_checkpoint(&a.model)?;
    let cover = read_image(&a.cover)?;
    if let Some(note) = &cover.converted_from {
        writeln!(err, "note: cover was {note}")?;
    }
    let payload = match (&a.message, &a.message_file) {
        (Some(text), _) => text.as_bytes().to_vec(),
        (None, Some(p)) => std::fs::read(p)?,
        (None, None) => unreachable!("clap requires one message source"),
    };
    let emb = embed_message(&ckpt.models, &cover.image, &payload, a.seed)?;
    write_image(&a.out, &emb.stego)?;
    let cap = emb.capacity;
    writeln!(
        out,
        "embedded {} bytes: {} of {} bits used ({:.1}%), {} payload blocks of {}, max payload {} bytes",
        payload.len(),
        emb.frame_bits,
        cap.bits,
        100.0 * emb.frame_bits as f64 / cap.bits as f64,
        cap.payload_blocks,
        cap.blocks,
        cap.max_payload_bytes().unwrap_or(0)
    )?;
    writeln!(out, "PSNR vs cover {:.2} dB", psnr(&cover.image, &emb.stego)?)?;
    writeln!(out, "wrote {}", a.out.display())?;
    Ok(())
}

fn cmd_extract(a: ExtractArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let ckpt = load_checkpoint(&a.model)?;
    let stego = read_image(&a.stego)?;
    let ex = extract_message(&ckpt.models, &stego.image)?;
    match &a.out {
        Some(p) => std::fs::write(p, &ex.payload)?,
        None => {
            out.write_all(&ex.payload)?;
            if !ex.payload.is_empty() {
                writeln!(out)?;
            }
        }
    }
    writeln!(
        err,
        "CRC ok: {} payload bytes, {} frame bits of {} read",
        ex.payload.len(),
        ex.frame_bits,
        ex.bits_read
    )?;
    Ok(())
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let ckpt = load_checkpoint(&a.model)?;
    let data = Dataset::from_dir(&a.data, 1)?;
    let opts = BenchOptions {
        repeats: a.repeats,
        diff_dir: a.diff_dir.clone(),
        ..BenchOptions::default()
    };
    let name = a.data.file_name().map_or("data".into(), |n| n.to_string_lossy().into_owned());
    let report = bench(&ckpt.models, &data, &name, &opts)?;
    if report.images == 0 {
        return Err(Error::Dataset(format!("no image in {} holds a full block", a.data.display())).into());
    }
    std::fs::write(&a.report, report.to_json()?)?;
    writeln!(out, "{report}")?;
    writeln!(out, "report written to {}", a.report.display())?;
    Ok(())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let tuples = parse_spec(&a.spec)?;
    let seeds = parse_seeds(&a.seeds)?;
    let min = tuples.iter().map(|t| t.block).max().unwrap_or(1);
    let data = Dataset::from_dir(&a.data, min)?;
    let spec = SweepSpec::new(tuples, a.budget_steps, seeds);
    let report = sweep(&spec, &data, |r| {
        let _ = writeln!(
            out,
            "trained {} seed {}: {}",
            r.tuple,
            r.seed,
            match (&r.ber, &r.error) {
                (Some(b), _) => format!("BER {b:.6}"),
                (_, Some(e)) => format!("failed: {e}"),
                _ => String::new(),
            }
        );
    });
    std::fs::write(&a.report, report.to_json()?)?;
    writeln!(out, "{report}")?;
    writeln!(out, "report written to {}", a.report.display())?;
    Ok(())
}

fn cmd_inspect(a: InspectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let bytes = std::fs::read(&a.model).map_err(|source| CheckpointError::Io {
        path: a.model.display().to_string(),
        source,
    })?;
    let ckpt = crate::train::Checkpoint::from_bytes(&bytes)?;
    let cfg = ckpt.config();
    let fc = feature_capacity(cfg.k, cfg.msg_bits);
    let (rn, rd) = fc.rho_fraction();
    let cx = model_complexity(cfg)?;
    writeln!(out, "checkpoint   {} ({} bytes), CRC-32 ok", a.model.display(), bytes.len())?;
    writeln!(
        out,
        "config       B={} k={} |M|={} seed={}",
        cfg.block, cfg.k, cfg.msg_bits, cfg.seed
    )?;
    writeln!(
        out,
        "loss         lambda_I={} lambda_M={} lambda_G={} lr={}",
        cfg.lambda_i, cfg.lambda_m, cfg.lambda_g, cfg.adam.lr
    )?;
    writeln!(
        out,
        "rho          {:.4} ({rn}/{rd}), feature channels {}",
        fc.rho(),
        fc.feature_channels
    )?;
    writeln!(out, "BPP          {:.4}", bits_per_pixel(cfg.block, cfg.msg_bits))?;
    writeln!(
        out,
        "params       {} ({:.4}M; embedder {}, extractor {}, discriminator {}; layer formula {})",
        ckpt.models.param_count(),
        ckpt.models.param_count() as f64 / 1e6,
        cx.embedder_params,
        cx.extractor_params,
        cx.discriminator_params,
        param_count_from_specs(cfg)
    )?;
    writeln!(
        out,
        "FLOPs        {} per block embed ({:.4} G)",
        cx.flops_per_block,
        cx.flops_per_block as f64 / 1e9
    )?;
    writeln!(out, "step         {}", ckpt.step)?;
    match ckpt.best {
        Some(b) => writeln!(out, "best epoch   {} (val BER {:.6}, PSNR {:.2} dB)", b.epoch, b.ber, b.psnr)?,
        None => writeln!(out, "best epoch   none recorded")?,
    }
    Ok(())
}
