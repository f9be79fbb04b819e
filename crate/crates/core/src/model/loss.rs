use super::ModelConfig;
use crate::error::Result;
use crate::tensor::{Tape, Var};

/// Clamp applied to probabilities before taking logs.
pub const LOG_EPS: f32 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub image: Var,
    pub message: Var,
    pub adversarial: Var,
}

/// `E = λ_I·mse(C, C') + λ_M·mse(M, σ(logits)) + λ_G·mean(ln(1 − p_stego))`.
pub fn total_loss(tape: &mut Tape, cfg: &ModelConfig, cover: Var, stego: Var, msg: Var, logits: Var, p_stego: Var) -> Result<LossVars> {
    let image = tape.mse(cover, stego)?;
    let decoded = tape.sigmoid(logits);
    let message = tape.mse(msg, decoded)?;
    let q = tape.one_minus(p_stego);
    let log_q = tape.log_clamped(q, LOG_EPS);
    let adversarial = tape.mean(log_q);

    let a = tape.scale(image, cfg.lambda_i);
    let b = tape.scale(message, cfg.lambda_m);
    let c = tape.scale(adversarial, cfg.lambda_g);
    let ab = tape.add(a, b)?;
    let total = tape.add(ab, c)?;
    Ok(LossVars {
        total,
        image,
        message,
        adversarial,
    })
}

/// Binary cross-entropy of the discriminator: `−[mean ln p_cover + mean ln(1 − p_stego)]`.
pub fn discriminator_loss(tape: &mut Tape, p_cover: Var, p_stego: Var) -> Result<Var> {
    let lc = tape.log_clamped(p_cover, LOG_EPS);
    let real = tape.mean(lc);
    let q = tape.one_minus(p_stego);
    let lq = tape.log_clamped(q, LOG_EPS);
    let fake = tape.mean(lq);
    let sum = tape.add(real, fake)?;
    Ok(tape.scale(sum, -1.0))
}
