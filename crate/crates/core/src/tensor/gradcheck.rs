//! Central finite-difference gradient checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, Var};
use crate::error::Result;

pub const DEFAULT_STEP: f32 = 1e-3;

/// Outcome of [`finite_diff_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    /// Max over checked coordinates of
    /// `|analytic − numeric| / max(1, |analytic|, |numeric|)`.
    pub max_error: f32,
    pub checked: usize,
    /// Coordinates whose `±h` probes crossed a ReLU or clamp boundary, where
    /// a central difference does not estimate the derivative.
    pub skipped: usize,
}

/// Compares tape gradients of `op` against central differences and returns
/// the max relative error (see [`finite_diff_report`]).
pub fn finite_diff_check<F>(inputs: &[Tensor], h: f32, op: F) -> Result<f32>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    Ok(finite_diff_report(inputs, h, op)?.max_error)
}

/// `op` records a computation over the given input vars. A non-scalar output
/// is reduced to a scalar with a fixed random projection (scaled by
/// `1/√n` so the loss stays O(1)). Every input coordinate is probed at
/// `x ± h`.
pub fn finite_diff_report<F>(inputs: &[Tensor], h: f32, op: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut projection: Option<Tensor> = None;
    let mut eval = |inputs: &[Tensor]| -> Result<(Tape, Vec<Var>, Var)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let mut out = op(&mut tape, &vars)?;
        if tape.value(out).len() != 1 {
            let shape = tape.value(out).shape().to_vec();
            let proj = projection.get_or_insert_with(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
                let n: usize = shape.iter().product();
                let s = 1.0 / (n as f32).sqrt();
                Tensor::uniform(&shape, -s, s, &mut rng)
            });
            out = tape.weighted_sum(out, proj.clone())?;
        }
        Ok((tape, vars, out))
    };

    let (tape, vars, out) = eval(inputs)?;
    let base = tape.kink_signature();
    let grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.get(v)).collect();
    let mut report = GradCheck {
        max_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut probe = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        for j in 0..input.len() {
            let orig = input.data()[j];
            probe[i].data_mut()[j] = orig + h;
            let (tp, _, op) = eval(&probe)?;
            probe[i].data_mut()[j] = orig - h;
            let (tm, _, om) = eval(&probe)?;
            probe[i].data_mut()[j] = orig;
            if tp.kink_signature() != base || tm.kink_signature() != base {
                report.skipped += 1;
                continue;
            }
            let (plus, minus) = (tp.value(op).item() as f64, tm.value(om).item() as f64);
            let numeric = ((plus - minus) / (2.0 * h as f64)) as f32;
            let a = analytic[i].data()[j];
            let err = (a - numeric).abs() / 1f32.max(a.abs()).max(numeric.abs());
            report.max_error = report.max_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero() {
        let x = Tensor::scalar(0.0);
        let err = finite_diff_check(std::slice::from_ref(&x), DEFAULT_STEP, |t, v| Ok(t.sigmoid(v[0]))).unwrap();
        assert!(err < 1e-4);
        let mut tape = Tape::new();
        let v = tape.leaf(x);
        let s = tape.sigmoid(v);
        assert_eq!(tape.backward(s).unwrap().get(v).item(), 0.25);
    }

    #[test]
    fn relu_away_from_zero() {
        let x = Tensor::new(&[4], vec![-1.2, -0.3, 0.4, 2.0]).unwrap();
        let err = finite_diff_check(&[x], DEFAULT_STEP, |t, v| Ok(t.relu(v[0]))).unwrap();
        assert!(err < 1e-3);
    }

    #[test]
    fn probes_across_a_kink_are_skipped() {
        let x = Tensor::new(&[3], vec![0.0004, -0.8, 1.5]).unwrap();
        let r = finite_diff_report(&[x], DEFAULT_STEP, |t, v| Ok(t.relu(v[0]))).unwrap();
        assert_eq!((r.checked, r.skipped), (2, 1));
        assert!(r.max_error < 1e-3);
    }
}
