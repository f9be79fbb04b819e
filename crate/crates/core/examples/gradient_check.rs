//! Central finite-difference checks of a few tape ops.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mshidden::tensor::gradcheck::DEFAULT_STEP;
use mshidden::tensor::{finite_diff_report, Tensor};

fn main() -> mshidden::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Tensor::uniform(&[2, 3, 6, 6], -1.0, 1.0, &mut rng);
    let w = Tensor::uniform(&[4, 3, 3, 3], -0.5, 0.5, &mut rng);
    let b = Tensor::uniform(&[4], -0.5, 0.5, &mut rng);
    let wt = Tensor::uniform(&[3, 2, 3, 3], -0.5, 0.5, &mut rng);
    let bt = Tensor::uniform(&[2], -0.5, 0.5, &mut rng);

    let checks = [
        (
            "conv2d",
            finite_diff_report(&[x.clone(), w.clone(), b.clone()], DEFAULT_STEP, |t, v| {
                t.conv2d(v[0], v[1], v[2], 1)
            })?,
        ),
        (
            "conv2d stride 2",
            finite_diff_report(&[x.clone(), w, b], DEFAULT_STEP, |t, v| t.conv2d(v[0], v[1], v[2], 2))?,
        ),
        (
            "conv_transpose2d",
            finite_diff_report(&[x.clone(), wt, bt], DEFAULT_STEP, |t, v| t.conv_transpose2d(v[0], v[1], v[2]))?,
        ),
        (
            "sigmoid",
            finite_diff_report(std::slice::from_ref(&x), DEFAULT_STEP, |t, v| Ok(t.sigmoid(v[0])))?,
        ),
        ("relu", finite_diff_report(&[x], DEFAULT_STEP, |t, v| Ok(t.relu(v[0])))?),
    ];
    for (name, r) in checks {
        println!(
            "{name:<18} max rel error {:.2e}  ({} probes, {} skipped at kinks)",
            r.max_error, r.checked, r.skipped
        );
    }
    Ok(())
}
