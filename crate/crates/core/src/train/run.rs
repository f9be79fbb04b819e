use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::checkpoint::{save_checkpoint, BestRecord, Checkpoint};
use super::data::{eval_batch, BatchSampler, Dataset};
use super::step::{train_step, StepMetrics, TrainState};
use crate::codec::pipeline::chunked;
use crate::codec::quantize_value;
use crate::error::{Error, Result};
use crate::metrics::quality::{ber, psnr_from_mse};
use crate::model::{decode_bits, ModelConfig, StegoModels};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainRun {
    pub cfg: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Drives batch order, crops and messages; model init uses `cfg.seed`.
    pub seed: u64,
}

impl TrainRun {
    pub fn new(cfg: ModelConfig) -> Self {
        Self {
            cfg,
            epochs: 150,
            batch_size: 30,
            seed: cfg.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sampler(&self) -> BatchSampler {
        BatchSampler {
            block: self.cfg.block,
            msg_bits: self.cfg.msg_bits,
            batch_size: self.batch_size,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// Extractor applied to the unquantized stego.
    pub ber: f64,
    /// Extractor applied to the stego after 8-bit rounding.
    pub ber_quantized: f64,
    /// On 8-bit images.
    pub psnr_db: f64,
    pub psnr_float_db: f64,
}

/// Embeds `msgs` into `covers` (`[n, 3, B, B]`) and measures recovery and
/// distortion.
pub fn evaluate(models: &StegoModels, covers: &Tensor, msgs: &Tensor) -> Result<Evaluation> {
    let stego = chunked(&[covers, msgs], |p| models.embedder.forward(&p[0], &p[1]))?;
    let truth: Vec<u8> = msgs.data().iter().map(|&m| u8::from(m > 0.5)).collect();

    let logits = chunked(&[&stego], |p| models.extractor.forward(&p[0]))?;
    let quantized = stego.map(|v| quantize_value(v) as f32 / 255.0);
    let logits_q = chunked(&[&quantized], |p| models.extractor.forward(&p[0]))?;

    let (mut se8, mut se) = (0.0f64, 0.0f64);
    for ((&c, &s), &q) in covers.data().iter().zip(stego.data()).zip(quantized.data()) {
        let d8 = quantize_value(c) as f64 - quantize_value(q) as f64;
        se8 += d8 * d8;
        se += (c as f64 - s as f64).powi(2);
    }
    let n = covers.len().max(1) as f64;
    Ok(Evaluation {
        ber: ber(&decode_bits(&logits), &truth)?,
        ber_quantized: ber(&decode_bits(&logits_q), &truth)?,
        psnr_db: psnr_from_mse(se8 / n, 255.0),
        psnr_float_db: psnr_from_mse(se / n, 1.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Means over the epoch's training steps.
    pub total: f64,
    pub image: f64,
    pub message: f64,
    pub adversarial: f64,
    pub discriminator: f64,
    pub train_ber: f64,
    pub val: Evaluation,
}

pub const CSV_HEADER: &str = "epoch,E,L_I,L_M,L_G,val_BER,val_PSNR";

impl EpochRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.4}",
            self.epoch, self.total, self.image, self.message, self.adversarial, self.val.ber, self.val.psnr_db
        )
    }
}

/// Where [`train`] writes its artifacts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainOutputs {
    pub best: PathBuf,
    pub last: PathBuf,
    pub log: PathBuf,
}

impl TrainOutputs {
    /// `model.mshd` → best `model.mshd`, final `model.final.mshd`,
    /// log `model.csv`.
    pub fn beside(out: &Path) -> Self {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = out.extension().map(|e| e.to_string_lossy().into_owned());
        let last = match &ext {
            Some(e) => out.with_file_name(format!("{stem}.final.{e}")),
            None => out.with_file_name(format!("{stem}.final")),
        };
        Self {
            best: out.to_path_buf(),
            last,
            log: out.with_file_name(format!("{stem}.csv")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub history: Vec<EpochRecord>,
}

fn mean(xs: &[StepMetrics], f: impl Fn(&StepMetrics) -> f64) -> f64 {
    xs.iter().map(f).sum::<f64>() / xs.len().max(1) as f64
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Trains on ~90% of `data` and validates on the rest after every epoch
/// (see [`Dataset::split_validation`]). The best checkpoint is the epoch with
/// the lowest validation BER, ties broken by highest PSNR.
pub fn train(
    run: &TrainRun,
    data: &Dataset,
    outputs: Option<&TrainOutputs>,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainResult> {
    run.validate()?;
    let state = TrainState::from_config(run.cfg)?;
    let mut result = TrainResult {
        best: Checkpoint::new(state.models.clone()),
        last: Checkpoint::new(state.models.clone()),
        history: Vec::new(),
    };
    if run.epochs == 0 {
        if let Some(out) = outputs {
            save_checkpoint(&result.best, &out.best)?;
            save_checkpoint(&result.last, &out.last)?;
            write_atomic(&out.log, &format!("{CSV_HEADER}\n"))?;
        }
        return Ok(result);
    }

    let (train_set, val_set) = data.split_validation();
    if val_set.is_empty() || train_set.is_empty() {
        return Err(Error::Dataset(format!(
            "need at least 2 images for a train/validation split, found {}",
            data.len()
        )));
    }
    let sampler = run.sampler();
    let steps = sampler.steps_per_epoch(&train_set);
    if steps == 0 {
        return Err(Error::Dataset(format!(
            "dataset smaller than batch: {} training images, batch size {}",
            train_set.len(),
            run.batch_size
        )));
    }
    let (val_covers, val_msgs) = eval_batch(&val_set, run.cfg.block, run.cfg.msg_bits, run.seed)?;

    let mut state = state;
    let mut csv = format!("{CSV_HEADER}\n");
    for epoch in 0..run.epochs {
        let mut metrics = Vec::with_capacity(steps);
        for step in 0..steps {
            let (covers, msgs) = sampler.sample(&train_set, epoch as u64, step)?;
            metrics.push(train_step(&mut state, &covers, &msgs)?);
        }
        let val = evaluate(&state.models, &val_covers, &val_msgs)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            total: mean(&metrics, |m| m.total as f64),
            image: mean(&metrics, |m| m.image as f64),
            message: mean(&metrics, |m| m.message as f64),
            adversarial: mean(&metrics, |m| m.adversarial as f64),
            discriminator: mean(&metrics, |m| m.discriminator as f64),
            train_ber: mean(&metrics, |m| m.ber),
            val,
        };
        log::info!(
            "epoch {}: E {:.5} L_I {:.5} L_M {:.5} L_G {:.5} val BER {:.4} PSNR {:.2} dB",
            record.epoch,
            record.total,
            record.image,
            record.message,
            record.adversarial,
            val.ber,
            val.psnr_db
        );
        on_epoch(&record);
        result.history.push(record);
        writeln!(csv, "{}", record.csv_row()).unwrap();

        let improved = match result.best.best {
            None => true,
            Some(b) => (val.ber as f32) < b.ber || (val.ber as f32 == b.ber && val.psnr_db as f32 > b.psnr),
        };
        let marker = BestRecord {
            epoch: record.epoch as u32,
            ber: val.ber as f32,
            psnr: val.psnr_db as f32,
        };
        if improved {
            result.best = Checkpoint {
                models: state.models.clone(),
                step: state.step,
                best: Some(marker),
            };
        }
        result.last = Checkpoint {
            models: state.models.clone(),
            step: state.step,
            best: result.best.best,
        };
        if let Some(out) = outputs {
            if improved {
                save_checkpoint(&result.best, &out.best)?;
            }
            save_checkpoint(&result.last, &out.last)?;
            write_atomic(&out.log, &csv)?;
        }
    }
    Ok(result)
}

/// Trains `state` for a fixed number of steps, cycling through epochs of
/// `data`. Used where a step budget matters more than epochs.
pub fn fit_steps(state: &mut TrainState, data: &Dataset, sampler: &BatchSampler, steps: usize) -> Result<Vec<StepMetrics>> {
    let per_epoch = sampler.steps_per_epoch(data);
    if per_epoch == 0 {
        return Err(Error::Dataset(format!(
            "dataset smaller than batch: {} images, batch size {}",
            data.len(),
            sampler.batch_size
        )));
    }
    (0..steps)
        .map(|i| {
            let (covers, msgs) = sampler.sample(data, (i / per_epoch) as u64, i % per_epoch)?;
            train_step(state, &covers, &msgs)
        })
        .collect()
}
