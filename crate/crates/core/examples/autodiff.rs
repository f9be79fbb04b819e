//! Records a small convolutional expression on a tape, differentiates it, and
//! fits a linear layer with Adam.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mshidden::tensor::{adam_step, AdamConfig, AdamState, Tape, Tensor};

fn main() -> mshidden::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::uniform(&[1, 3, 8, 8], 0.0, 1.0, &mut rng));
    let w = tape.leaf(Tensor::randn(&[4, 3, 3, 3], 0.2, &mut rng));
    let b = tape.leaf(Tensor::zeros(&[4]));
    let h = tape.conv2d(x, w, b, 2)?;
    let h = tape.relu(h);
    let loss = tape.mean(h);
    let grads = tape.backward(loss)?;
    println!(
        "conv2d stride 2 -> {:?}, loss {:.5}",
        tape.value(h).shape(),
        tape.value(loss).item()
    );
    println!("|dL/dw| = {:.5}", grads.get(w).dot(&grads.get(w)).sqrt());

    // Fit y = A x + c.
    let target_w = Tensor::new(&[2, 3], vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0])?;
    let target_b = Tensor::new(&[2], vec![0.3, -0.7])?;
    let inputs = Tensor::uniform(&[64, 3], -1.0, 1.0, &mut rng);
    let targets = {
        let mut t = Tape::new();
        let (x, w, b) = (t.leaf(inputs.clone()), t.leaf(target_w), t.leaf(target_b));
        let y = t.linear(x, w, b)?;
        t.value(y).clone()
    };

    let mut params = [Tensor::zeros(&[2, 3]), Tensor::zeros(&[2])];
    let cfg = AdamConfig {
        lr: 0.05,
        ..AdamConfig::default()
    };
    let mut adam = AdamState::new(cfg, &[&[2, 3], &[2]]);
    for step in 0..=300 {
        let mut t = Tape::new();
        let x = t.leaf(inputs.clone());
        let w = t.leaf(params[0].clone());
        let b = t.leaf(params[1].clone());
        let y = t.leaf(targets.clone());
        let pred = t.linear(x, w, b)?;
        let loss = t.mse(pred, y)?;
        if step % 100 == 0 {
            println!("step {step:>3}  mse {:.6}", t.value(loss).item());
        }
        let g = t.backward(loss)?;
        let (gw, gb) = (g.get(w), g.get(b));
        let [pw, pb] = &mut params;
        adam_step(&mut [pw, pb], &[&gw, &gb], &mut adam)?;
    }
    println!("learned weights {:?}", params[0].data());
    Ok(())
}
