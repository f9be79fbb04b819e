use crate::error::{Error, Result};
use crate::model::{decode_bits, discriminator_loss, total_loss, ModelConfig, StegoModels};
use crate::tensor::{adam_step, AdamState, Tape, Tensor};

/// Networks plus optimizer state: everything that changes during training.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub models: StegoModels,
    /// Shared by embedder and extractor, in that parameter order.
    pub generator_opt: AdamState,
    pub discriminator_opt: AdamState,
    pub step: u64,
}

impl TrainState {
    pub fn new(models: StegoModels) -> Self {
        let adam = models.config().adam;
        let gen_shapes: Vec<&[usize]> = models
            .embedder
            .params()
            .shapes()
            .into_iter()
            .chain(models.extractor.params().shapes())
            .collect();
        let generator_opt = AdamState::new(adam, &gen_shapes);
        let discriminator_opt = AdamState::new(adam, &models.discriminator.params().shapes());
        Self {
            models,
            generator_opt,
            discriminator_opt,
            step: 0,
        }
    }

    pub fn from_config(cfg: ModelConfig) -> Result<Self> {
        Ok(Self::new(StegoModels::new(cfg)?))
    }

    pub fn config(&self) -> &ModelConfig {
        self.models.config()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub total: f32,
    pub image: f32,
    pub message: f32,
    pub adversarial: f32,
    pub discriminator: f32,
    pub ber: f64,
}

fn finite(v: f32, step: u64, term: &'static str) -> Result<f32> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { step, term })
    }
}

/// Fraction of positions where the hard bits differ.
pub(crate) fn bit_errors(logits: &Tensor, msg: &Tensor) -> usize {
    decode_bits(logits)
        .iter()
        .zip(msg.data())
        .filter(|(&b, &m)| b != u8::from(m > 0.5))
        .count()
}

/// One adversarial update: a discriminator step on the detached stego batch,
/// then a joint embedder + extractor step on the full objective.
pub fn train_step(state: &mut TrainState, cover: &Tensor, msg: &Tensor) -> Result<StepMetrics> {
    let cfg = *state.config();
    let step = state.step;
    let models = &mut state.models;

    let mut tape = Tape::new();
    let emb_vars = models.embedder.bind(&mut tape);
    let ext_vars = models.extractor.bind(&mut tape);
    let c = tape.leaf(cover.clone());
    let m = tape.leaf(msg.clone());
    let stego = models.embedder.record(&mut tape, &emb_vars, c, m)?;

    // Discriminator phase.
    let disc_loss = {
        let mut dt = Tape::new();
        let bound = models.discriminator.bind(&mut dt);
        let cv = dt.leaf(cover.clone());
        let sv = dt.leaf(tape.value(stego).clone());
        let pc = models.discriminator.record(&mut dt, &bound, cv)?;
        let ps = models.discriminator.record(&mut dt, &bound, sv)?;
        let ld = discriminator_loss(&mut dt, pc, ps)?;
        let value = finite(dt.value(ld).item(), step, "L_D")?;
        let mut grads = dt.backward(ld)?;
        let g: Vec<Tensor> = bound.vars().into_iter().map(|v| grads.take(v)).collect();
        let g_refs: Vec<&Tensor> = g.iter().collect();
        let mut p: Vec<&mut Tensor> = models.discriminator.params_mut().tensors_mut().collect();
        adam_step(&mut p, &g_refs, &mut state.discriminator_opt)?;
        value
    };

    // Generator phase, against the freshly updated discriminator.
    let disc_vars = models.discriminator.bind(&mut tape);
    let logits = models.extractor.record(&mut tape, &ext_vars, stego)?;
    let p_stego = models.discriminator.record(&mut tape, &disc_vars, stego)?;
    let loss = total_loss(&mut tape, &cfg, c, stego, m, logits, p_stego)?;
    let metrics = StepMetrics {
        total: finite(tape.value(loss.total).item(), step, "E")?,
        image: finite(tape.value(loss.image).item(), step, "L_I")?,
        message: finite(tape.value(loss.message).item(), step, "L_M")?,
        adversarial: finite(tape.value(loss.adversarial).item(), step, "L_G")?,
        discriminator: disc_loss,
        ber: bit_errors(tape.value(logits), msg) as f64 / msg.len() as f64,
    };

    let mut grads = tape.backward(loss.total)?;
    let g: Vec<Tensor> = emb_vars.vars().into_iter().chain(ext_vars.vars()).map(|v| grads.take(v)).collect();
    let g_refs: Vec<&Tensor> = g.iter().collect();
    let mut p: Vec<&mut Tensor> = models
        .embedder
        .params_mut()
        .tensors_mut()
        .chain(models.extractor.params_mut().tensors_mut())
        .collect();
    adam_step(&mut p, &g_refs, &mut state.generator_opt)?;

    state.step += 1;
    Ok(metrics)
}
