//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mshidden::model::networks::Bound;
use mshidden::model::{discriminator_loss, total_loss, ModelConfig, StegoModels};
use mshidden::tensor::gradcheck::DEFAULT_STEP;
use mshidden::tensor::{finite_diff_report, GradCheck, Tape, Tensor, Var};
use mshidden::Result;

/// Uniform values whose magnitude stays at least `gap` away from zero, so
/// central differences never straddle a ReLU kink.
fn away_from_zero(shape: &[usize], gap: f32, rng: &mut ChaCha8Rng) -> Tensor {
    let t = Tensor::uniform(shape, -1.0, 1.0, rng);
    t.map(|v| if v >= 0.0 { v + gap } else { v - gap })
}

fn uniform(shape: &[usize], lo: f32, hi: f32, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::uniform(shape, lo, hi, rng)
}

/// Finite-difference checks of every differentiable tape op for one seed.
pub fn op_gradient_errors(seed: u64) -> Result<Vec<(&'static str, GradCheck)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = DEFAULT_STEP;
    let mut out = Vec::new();

    let x = uniform(&[2, 3, 6, 6], -1.0, 1.0, &mut rng);
    let w = uniform(&[4, 3, 3, 3], -0.5, 0.5, &mut rng);
    let b = uniform(&[4], -0.5, 0.5, &mut rng);
    for (name, stride) in [("conv2d stride 1", 1), ("conv2d stride 2", 2)] {
        let e = finite_diff_report(&[x.clone(), w.clone(), b.clone()], h, |t, v| t.conv2d(v[0], v[1], v[2], stride))?;
        out.push((name, e));
    }
    let xt = uniform(&[2, 4, 3, 3], -1.0, 1.0, &mut rng);
    let wt = uniform(&[4, 2, 3, 3], -0.5, 0.5, &mut rng);
    let bt = uniform(&[2], -0.5, 0.5, &mut rng);
    out.push((
        "conv_transpose2d",
        finite_diff_report(&[xt, wt, bt], h, |t, v| t.conv_transpose2d(v[0], v[1], v[2]))?,
    ));

    let a = away_from_zero(&[3, 5], 0.05, &mut rng);
    out.push(("relu", finite_diff_report(&[a], h, |t, v| Ok(t.relu(v[0])))?));
    let a = uniform(&[3, 5], -4.0, 4.0, &mut rng);
    out.push(("sigmoid", finite_diff_report(&[a], h, |t, v| Ok(t.sigmoid(v[0])))?));

    let xl = uniform(&[3, 6], -1.0, 1.0, &mut rng);
    let wl = uniform(&[4, 6], -1.0, 1.0, &mut rng);
    let bl = uniform(&[4], -1.0, 1.0, &mut rng);
    out.push(("linear", finite_diff_report(&[xl, wl, bl], h, |t, v| t.linear(v[0], v[1], v[2]))?));

    let p = uniform(&[2, 3, 4, 4], -1.0, 1.0, &mut rng);
    let q = uniform(&[2, 2, 4, 4], -1.0, 1.0, &mut rng);
    out.push((
        "concat_channels",
        finite_diff_report(&[p.clone(), q], h, |t, v| t.concat_channels(v[0], v[1]))?,
    ));
    let r = uniform(&[2, 3, 4, 4], -1.0, 1.0, &mut rng);
    out.push(("add", finite_diff_report(&[p.clone(), r.clone()], h, |t, v| t.add(v[0], v[1]))?));
    out.push(("sub", finite_diff_report(&[p.clone(), r.clone()], h, |t, v| t.sub(v[0], v[1]))?));
    out.push((
        "scale",
        finite_diff_report(std::slice::from_ref(&p), h, |t, v| Ok(t.scale(v[0], -1.7)))?,
    ));
    out.push((
        "one_minus",
        finite_diff_report(std::slice::from_ref(&p), h, |t, v| Ok(t.one_minus(v[0])))?,
    ));
    let pos = uniform(&[2, 5], 0.1, 0.9, &mut rng);
    out.push(("log_clamped", finite_diff_report(&[pos], h, |t, v| Ok(t.log_clamped(v[0], 1e-6)))?));
    out.push((
        "global_avg_pool",
        finite_diff_report(std::slice::from_ref(&p), h, |t, v| t.global_avg_pool(v[0]))?,
    ));
    let m = uniform(&[2, 3], -1.0, 1.0, &mut rng);
    out.push((
        "broadcast_spatial",
        finite_diff_report(&[m], h, |t, v| t.broadcast_spatial(v[0], 3, 2))?,
    ));
    out.push(("mse", finite_diff_report(&[p.clone(), r], h, |t, v| t.mse(v[0], v[1]))?));
    out.push(("mean", finite_diff_report(&[p], h, |t, v| Ok(t.mean(v[0])))?));
    Ok(out)
}

pub fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig::new(8, 2, 4).unwrap().with_seed(seed)
}

fn batch(cfg: &ModelConfig, n: usize, rng: &mut ChaCha8Rng) -> (Tensor, Tensor) {
    let b = cfg.block;
    let cover = Tensor::uniform(&[n, 3, b, b], 0.05, 0.95, rng);
    let bits = (0..n * cfg.msg_bits).map(|_| rng.gen::<bool>() as u8 as f32).collect();
    (cover, Tensor::new(&[n, cfg.msg_bits], bits).unwrap())
}

fn params(models: &StegoModels) -> (Vec<Tensor>, usize, usize) {
    let e: Vec<Tensor> = models.embedder.params().tensors().cloned().collect();
    let x: Vec<Tensor> = models.extractor.params().tensors().cloned().collect();
    let d: Vec<Tensor> = models.discriminator.params().tensors().cloned().collect();
    let (ne, nx) = (e.len(), x.len());
    (e.into_iter().chain(x).chain(d).collect(), ne, nx)
}

/// Finite-difference checks of the full generator objective `E` and the
/// discriminator loss, with respect to every parameter of a `(8, 2, 4)`
/// model and the cover batch.
pub fn objective_gradient_errors(seed: u64) -> Result<(GradCheck, GradCheck)> {
    let cfg = tiny_config(seed);
    let models = StegoModels::new(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let (cover, msg) = batch(&cfg, 2, &mut rng);
    let (mut inputs, ne, nx) = params(&models);
    let n_params = inputs.len();
    inputs.push(cover);
    let m = &models;

    let e = finite_diff_report(&inputs, DEFAULT_STEP, |t: &mut Tape, v: &[Var]| {
        let emb = Bound::from_vars(&v[..ne]);
        let ext = Bound::from_vars(&v[ne..ne + nx]);
        let dis = Bound::from_vars(&v[ne + nx..n_params]);
        let c = v[n_params];
        let mv = t.leaf(msg.clone());
        let stego = m.embedder.record(t, &emb, c, mv)?;
        let logits = m.extractor.record(t, &ext, stego)?;
        let p = m.discriminator.record(t, &dis, stego)?;
        Ok(total_loss(t, &cfg, c, stego, mv, logits, p)?.total)
    })?;

    let stego = m.embedder.forward(&inputs[n_params], &msg)?;
    let mut dinputs: Vec<Tensor> = inputs[ne + nx..n_params].to_vec();
    dinputs.push(inputs[n_params].clone());
    dinputs.push(stego);
    let nd = n_params - ne - nx;
    let d = finite_diff_report(&dinputs, DEFAULT_STEP, |t: &mut Tape, v: &[Var]| {
        let dis = Bound::from_vars(&v[..nd]);
        let pc = m.discriminator.record(t, &dis, v[nd])?;
        let ps = m.discriminator.record(t, &dis, v[nd + 1])?;
        discriminator_loss(t, pc, ps)
    })?;
    Ok((e, d))
}
