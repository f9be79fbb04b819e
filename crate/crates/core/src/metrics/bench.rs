//! Per-image embed/extract benchmark.
//!
//! Every image is tiled, each block gets a random full `|M|`-bit message,
//! and the stego is measured twice: bits read back before and after 8-bit
//! rounding, and cover-vs-stego distortion on the rounded image. Bits are
//! scored over fully-interior blocks only, since the rest is cropped away.

use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use super::quality::{ber, diff_image, mae, psnr, psnr_float, ssim};
use crate::codec::pipeline::chunked;
use crate::codec::{plan_blocks, quantize, tile, to_tensor, untile, write_image, BlockLayout};
use crate::error::Result;
use crate::model::{bits_per_pixel, decode_bits, model_complexity, ModelConfig, StegoModels};
use crate::tensor::Tensor;
use crate::train::data::mix_seed;
use crate::train::Dataset;

/// What the benchmark needs from a model.
pub trait StegoModel {
    fn block(&self) -> usize;
    fn msg_bits(&self) -> usize;
    /// `[n, 3, B, B]` and `[n, |M|]` to `[n, 3, B, B]`.
    fn embed(&self, covers: &Tensor, msgs: &Tensor) -> Result<Tensor>;
    /// `[n, 3, B, B]` to logits `[n, |M|]`.
    fn extract(&self, stego: &Tensor) -> Result<Tensor>;
    fn config(&self) -> Option<ModelConfig> {
        None
    }
    /// `(parameters, FLOPs per block)`.
    fn complexity(&self) -> (usize, u64) {
        (0, 0)
    }
}

impl StegoModel for StegoModels {
    fn block(&self) -> usize {
        self.config().block
    }

    fn msg_bits(&self) -> usize {
        self.config().msg_bits
    }

    fn embed(&self, covers: &Tensor, msgs: &Tensor) -> Result<Tensor> {
        chunked(&[covers, msgs], |p| self.embedder.forward(&p[0], &p[1]))
    }

    fn extract(&self, stego: &Tensor) -> Result<Tensor> {
        chunked(&[stego], |p| self.extractor.forward(&p[0]))
    }

    fn config(&self) -> Option<ModelConfig> {
        Some(*self.config())
    }

    fn complexity(&self) -> (usize, u64) {
        let flops = model_complexity(self.config()).map(|c| c.flops_per_block).unwrap_or(0);
        (self.param_count(), flops)
    }
}

/// Returns the cover unchanged and reads every bit as 0: PSNR is infinite
/// and BER is the fraction of ones, about 0.5.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityStub {
    pub block: usize,
    pub msg_bits: usize,
}

impl StegoModel for IdentityStub {
    fn block(&self) -> usize {
        self.block
    }

    fn msg_bits(&self) -> usize {
        self.msg_bits
    }

    fn embed(&self, covers: &Tensor, _msgs: &Tensor) -> Result<Tensor> {
        Ok(covers.clone())
    }

    fn extract(&self, stego: &Tensor) -> Result<Tensor> {
        Ok(Tensor::full(&[stego.shape()[0], self.msg_bits], -1.0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOptions {
    /// Random messages per image; BER and distortion are averaged.
    pub repeats: usize,
    pub seed: u64,
    /// When set, `|C − C'|·diff_scale` images go here, one per cover.
    pub diff_dir: Option<PathBuf>,
    pub diff_scale: u32,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repeats: 100,
            seed: crate::model::DEFAULT_SEED,
            diff_dir: None,
            diff_scale: 15,
        }
    }
}

/// Non-finite values do not exist in JSON: `+∞` becomes `"inf"`, NaN `null`.
fn float<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_none()
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub blocks: usize,
    #[serde(serialize_with = "float")]
    pub ber: f64,
    #[serde(serialize_with = "float")]
    pub ber_quantized: f64,
    #[serde(serialize_with = "float")]
    pub psnr_db: f64,
    #[serde(serialize_with = "float")]
    pub psnr_float_db: f64,
    /// NaN for images smaller than the SSIM window.
    #[serde(serialize_with = "float")]
    pub ssim: f64,
    #[serde(serialize_with = "float")]
    pub mae: f64,
    #[serde(serialize_with = "float")]
    pub embed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub dataset: String,
    pub block: usize,
    pub k: Option<usize>,
    pub msg_bits: usize,
    pub repeats: usize,
    pub images: usize,
    pub skipped: usize,
    #[serde(serialize_with = "float")]
    pub ber: f64,
    #[serde(serialize_with = "float")]
    pub ber_quantized: f64,
    #[serde(serialize_with = "float")]
    pub psnr_db: f64,
    #[serde(serialize_with = "float")]
    pub psnr_float_db: f64,
    #[serde(serialize_with = "float")]
    pub ssim: f64,
    #[serde(serialize_with = "float")]
    pub mae: f64,
    #[serde(serialize_with = "float")]
    pub bpp: f64,
    pub params: usize,
    pub flops: u64,
    #[serde(serialize_with = "float")]
    pub embed_seconds: f64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn interior_blocks(blocks: &Tensor, layout: &BlockLayout) -> Result<Tensor> {
    let idx = layout.interior();
    let mut data = Vec::with_capacity(idx.len() * blocks.len() / blocks.shape()[0]);
    for &i in &idx {
        data.extend_from_slice(blocks.sample(i));
    }
    let mut shape = blocks.shape().to_vec();
    shape[0] = idx.len();
    Tensor::new(&shape, data)
}

fn mean_of(rows: &[BenchRow], f: impl Fn(&BenchRow) -> f64) -> f64 {
    rows.iter().map(f).sum::<f64>() / rows.len().max(1) as f64
}

pub fn bench<M: StegoModel + ?Sized>(model: &M, data: &Dataset, dataset_name: &str, opts: &BenchOptions) -> Result<BenchReport> {
    let (b, m) = (model.block(), model.msg_bits());
    let repeats = opts.repeats.max(1);
    if let Some(dir) = &opts.diff_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut rows = Vec::new();
    let mut skipped = data.skipped;
    for (idx, (name, cover)) in data.iter().enumerate() {
        let (w, h) = (cover.width() as usize, cover.height() as usize);
        let layout = plan_blocks(w, h, b);
        if layout.interior().is_empty() {
            log::warn!("skipping {name}: smaller than one {b}x{b} block");
            skipped += 1;
            continue;
        }
        let cover_t = to_tensor(cover);
        let blocks = tile(&cover_t, &layout)?;
        let mut acc = [0.0f64; 7];
        for r in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[opts.seed, idx as u64, r as u64]));
            let msgs = Tensor::new(
                &[layout.block_count(), m],
                (0..layout.block_count() * m).map(|_| rng.gen::<bool>() as u8 as f32).collect(),
            )?;

            let t0 = Instant::now();
            let stego_float = untile(&model.embed(&blocks, &msgs)?, &layout)?;
            let stego = quantize(&stego_float)?;
            let seconds = t0.elapsed().as_secs_f64();

            let truth: Vec<u8> = decode_bits(&interior_blocks(&msgs, &layout)?.map(|v| v - 0.5));
            let read =
                |img: &Tensor| -> Result<Vec<u8>> { Ok(decode_bits(&model.extract(&interior_blocks(&tile(img, &layout)?, &layout)?)?)) };
            acc[0] += ber(&read(&stego_float)?, &truth)?;
            acc[1] += ber(&read(&to_tensor(&stego))?, &truth)?;
            acc[2] += psnr(cover, &stego)?;
            acc[3] += psnr_float(&cover_t, &stego_float)?;
            acc[4] += ssim(cover, &stego).unwrap_or(f64::NAN);
            acc[5] += mae(cover, &stego)?;
            acc[6] += seconds;

            if r == 0 {
                if let Some(dir) = &opts.diff_dir {
                    let stem = std::path::Path::new(name).file_stem().unwrap().to_string_lossy();
                    write_image(&dir.join(format!("{stem}.diff.png")), &diff_image(cover, &stego, opts.diff_scale)?)?;
                }
            }
        }
        let n = repeats as f64;
        rows.push(BenchRow {
            image: name.to_string(),
            width: w,
            height: h,
            blocks: layout.block_count(),
            ber: acc[0] / n,
            ber_quantized: acc[1] / n,
            psnr_db: acc[2] / n,
            psnr_float_db: acc[3] / n,
            ssim: acc[4] / n,
            mae: acc[5] / n,
            embed_seconds: acc[6] / n,
        });
    }
    let cfg = model.config();
    let (params, flops) = model.complexity();
    Ok(BenchReport {
        dataset: dataset_name.to_string(),
        block: b,
        k: cfg.map(|c| c.k),
        msg_bits: m,
        repeats,
        images: rows.len(),
        skipped,
        ber: mean_of(&rows, |r| r.ber),
        ber_quantized: mean_of(&rows, |r| r.ber_quantized),
        psnr_db: mean_of(&rows, |r| r.psnr_db),
        psnr_float_db: mean_of(&rows, |r| r.psnr_float_db),
        ssim: mean_of(&rows, |r| r.ssim),
        mae: mean_of(&rows, |r| r.mae),
        bpp: bits_per_pixel(b, m),
        params,
        flops,
        embed_seconds: mean_of(&rows, |r| r.embed_seconds),
        rows,
    })
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.k.map_or("-".to_string(), |k| k.to_string());
        writeln!(
            f,
            "dataset {}  B={} k={} |M|={}  repeats={}  images={} skipped={}",
            self.dataset, self.block, k, self.msg_bits, self.repeats, self.images, self.skipped
        )?;
        writeln!(
            f,
            "{:<24} {:>10} {:>10} {:>9} {:>7} {:>7} {:>10}",
            "image", "BER", "BER(q)", "PSNR", "SSIM", "MAE", "embed s"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>10.6} {:>10.6} {:>9.3} {:>7.4} {:>7.4} {:>10.5}",
                r.image, r.ber, r.ber_quantized, r.psnr_db, r.ssim, r.mae, r.embed_seconds
            )?;
        }
        writeln!(
            f,
            "{:<24} {:>10.6} {:>10.6} {:>9.3} {:>7.4} {:>7.4} {:>10.5}",
            "mean", self.ber, self.ber_quantized, self.psnr_db, self.ssim, self.mae, self.embed_seconds
        )?;
        write!(f, "BPP {:.4}  params {}  FLOPs/block {}", self.bpp, self.params, self.flops)
    }
}
