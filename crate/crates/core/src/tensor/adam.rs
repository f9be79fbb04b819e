use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments for an ordered list of parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[&[usize]]) -> Self {
        Self {
            config,
            step: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &Tensor {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &Tensor {
        &self.v[i]
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [&mut Tensor], grads: &[&Tensor], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::dim(format!(
            "adam_step: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.m[i].shape() {
            return Err(Error::dim(format!(
                "adam_step: parameter {i} shape {:?}, grad {:?}, moments {:?}",
                p.shape(),
                g.shape(),
                state.m[i].shape()
            )));
        }
    }

    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as f64;
    let bc1 = (1.0 - (beta1 as f64).powf(t)) as f32;
    let bc2 = (1.0 - (beta2 as f64).powf(t)) as f32;

    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (((pj, &gj), mj), vj) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
            *mj = beta1 * *mj + (1.0 - beta1) * gj;
            *vj = beta2 * *vj + (1.0 - beta2) * gj * gj;
            let m_hat = *mj / bc1;
            let v_hat = *vj / bc2;
            *pj -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_state(lr: f32) -> AdamState {
        AdamState::new(AdamConfig { lr, ..Default::default() }, &[&[1]])
    }

    #[test]
    fn first_step_moves_by_lr() {
        // t=1: m̂ = g, v̂ = g², so the update is lr·g/(|g| + ε).
        let mut p = Tensor::scalar(0.0);
        let g = Tensor::scalar(1.0);
        let mut st = scalar_state(1e-3);
        adam_step(&mut [&mut p], &[&g], &mut st).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.item() - expected).abs() < 1e-9);
        assert_eq!(st.step(), 1);
    }

    #[test]
    fn zero_gradient_keeps_parameter() {
        let mut p = Tensor::scalar(0.7);
        let mut st = scalar_state(1e-3);
        adam_step(&mut [&mut p], &[&Tensor::scalar(1.0)], &mut st).unwrap();
        let (after_one, m1, v1) = (p.item(), st.first_moment(0).item(), st.second_moment(0).item());
        // Momentum still carries the previous gradient, so check moments only
        // on a fresh state.
        let mut q = Tensor::scalar(0.7);
        let mut fresh = scalar_state(1e-3);
        adam_step(&mut [&mut q], &[&Tensor::scalar(0.0)], &mut fresh).unwrap();
        assert_eq!(q.item(), 0.7);
        adam_step(&mut [&mut p], &[&Tensor::scalar(0.0)], &mut st).unwrap();
        assert!((st.first_moment(0).item() - 0.9 * m1).abs() < 1e-9);
        assert!((st.second_moment(0).item() - 0.999 * v1).abs() < 1e-12);
        assert!(p.item() < after_one);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = Tensor::new(&[3], vec![1.0, -2.0, 3.5]).unwrap();
        let g = Tensor::new(&[3], vec![0.3, 0.0, -9.0]).unwrap();
        let mut st = AdamState::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            &[&[3]],
        );
        for _ in 0..5 {
            adam_step(&mut [&mut p], &[&g], &mut st).unwrap();
        }
        assert_eq!(p.data(), &[1.0, -2.0, 3.5]);
    }

    #[test]
    fn minimizes_quadratic() {
        // f(p) = (p − 3)², lr 0.1 so 100 steps suffice.
        let mut p = Tensor::scalar(0.0);
        let mut st = scalar_state(0.1);
        for _ in 0..100 {
            let g = Tensor::scalar(2.0 * (p.item() - 3.0));
            adam_step(&mut [&mut p], &[&g], &mut st).unwrap();
        }
        assert!((p.item() - 3.0).abs() < 0.5, "p = {}", p.item());
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut p = Tensor::zeros(&[2]);
        let mut st = AdamState::new(AdamConfig::default(), &[&[2]]);
        assert!(adam_step(&mut [&mut p], &[&Tensor::zeros(&[3])], &mut st).is_err());
        assert_eq!(st.step(), 0);
    }
}
