//! Forward and adjoint kernels.
//!
//! All convolutions use 3×3 kernels with padding 1. A stride-2 conv maps
//! `h → h/2` on even inputs, and the transposed conv is its exact adjoint
//! (padding 1, output padding 1), mapping `h → 2h`.

use super::gemm::gemm;
use super::Tensor;
use crate::error::{Error, Result};

pub const KERNEL: usize = 3;
const TAPS: usize = KERNEL * KERNEL;

fn check_kernel(weight: &Tensor, what: &str) -> Result<(usize, usize)> {
    let (a, b, kh, kw) = weight.dims4()?;
    if kh != KERNEL || kw != KERNEL {
        return Err(Error::dim(format!("{what}: expected 3×3 kernel, got {:?}", weight.shape())));
    }
    Ok((a, b))
}

fn check_bias(bias: &Tensor, channels: usize, what: &str) -> Result<()> {
    if bias.shape() != [channels] {
        return Err(Error::dim(format!("{what}: bias shape {:?}, expected [{channels}]", bias.shape())));
    }
    Ok(())
}

/// Output size of a padded 3×3 conv.
pub fn conv_out_size(size: usize, stride: usize) -> usize {
    (size + 2 - KERNEL) / stride + 1
}

/// Unfolds one `[c, h, w]` image into `[c·9, ho·wo]` patch columns.
#[allow(clippy::too_many_arguments)]
fn im2col(x: &[f32], c: usize, h: usize, w: usize, stride: usize, ho: usize, wo: usize, cols: &mut [f32]) {
    let p = ho * wo;
    for ch in 0..c {
        let plane = &x[ch * h * w..(ch + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &mut cols[(ch * TAPS + ky * KERNEL + kx) * p..][..p];
                for oy in 0..ho {
                    let iy = (oy * stride + ky) as isize - 1;
                    let out = &mut row[oy * wo..(oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, o) in out.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        *o = if ix < 0 || ix >= w as isize { 0.0 } else { src[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch columns back and adds into `x`.
#[allow(clippy::too_many_arguments)]
fn col2im_add(cols: &[f32], c: usize, h: usize, w: usize, stride: usize, ho: usize, wo: usize, x: &mut [f32]) {
    let p = ho * wo;
    for ch in 0..c {
        let plane = &mut x[ch * h * w..(ch + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = &cols[(ch * TAPS + ky * KERNEL + kx) * p..][..p];
                for oy in 0..ho {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, &v) in row[oy * wo..(oy + 1) * wo].iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && (ix as usize) < w {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn transpose(src: &[f32], rows: usize, cols: usize, dst: &mut [f32]) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// 3×3 cross-correlation with padding 1.
pub fn conv2d(input: &Tensor, weight: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let (b, ci, h, w) = input.dims4()?;
    let (co, wci) = check_kernel(weight, "conv2d")?;
    if wci != ci {
        return Err(Error::dim(format!("conv2d: input has {ci} channels, weight expects {wci}")));
    }
    check_bias(bias, co, "conv2d")?;
    if stride != 1 && stride != 2 {
        return Err(Error::dim(format!("conv2d: unsupported stride {stride}")));
    }
    if stride == 2 && (h % 2 != 0 || w % 2 != 0) {
        return Err(Error::dim(format!("conv2d: stride 2 needs even spatial size, got {h}×{w}")));
    }
    let (ho, wo) = (conv_out_size(h, stride), conv_out_size(w, stride));
    let (k, p) = (ci * TAPS, ho * wo);
    let mut cols = vec![0.0; k * p];
    let mut out = vec![0.0; b * co * p];
    for s in 0..b {
        im2col(input.sample(s), ci, h, w, stride, ho, wo, &mut cols);
        let y = &mut out[s * co * p..(s + 1) * co * p];
        for (o, row) in y.chunks_exact_mut(p).enumerate() {
            row.fill(bias.data()[o]);
        }
        gemm(co, p, k, weight.data(), k, 1, &cols, y, true);
    }
    Tensor::new(&[b, co, ho, wo], out)
}

/// Gradients of [`conv2d`] with respect to input, weight and bias.
pub fn conv2d_backward(input: &Tensor, weight: &Tensor, grad_out: &Tensor, stride: usize) -> Result<(Tensor, Tensor, Tensor)> {
    let (b, ci, h, w) = input.dims4()?;
    let (co, _) = check_kernel(weight, "conv2d_backward")?;
    let (_, gco, ho, wo) = grad_out.dims4()?;
    if gco != co || ho != conv_out_size(h, stride) || wo != conv_out_size(w, stride) {
        return Err(Error::dim("conv2d_backward: grad_out shape mismatch"));
    }
    let (k, p) = (ci * TAPS, ho * wo);
    let mut cols = vec![0.0; k * p];
    let mut cols_t = vec![0.0; p * k];
    let mut dcols = vec![0.0; k * p];
    let mut dx = vec![0.0; input.len()];
    let mut dw = vec![0.0; weight.len()];
    let mut db = vec![0.0; co];
    for s in 0..b {
        let dy = grad_out.sample(s);
        im2col(input.sample(s), ci, h, w, stride, ho, wo, &mut cols);
        transpose(&cols, k, p, &mut cols_t);
        gemm(co, k, p, dy, p, 1, &cols_t, &mut dw, true);
        gemm(k, p, co, weight.data(), 1, k, dy, &mut dcols, false);
        col2im_add(&dcols, ci, h, w, stride, ho, wo, &mut dx[s * ci * h * w..(s + 1) * ci * h * w]);
        for (o, row) in dy.chunks_exact(p).enumerate() {
            db[o] += row.iter().sum::<f32>();
        }
    }
    Ok((
        Tensor::new(input.shape(), dx)?,
        Tensor::new(weight.shape(), dw)?,
        Tensor::new(&[co], db)?,
    ))
}

/// Stride-2 transposed convolution doubling the spatial size.
///
/// `weight` is `[ci, co, 3, 3]`. The result equals the input-gradient of a
/// stride-2 [`conv2d`] with the same weight, plus the broadcast bias.
pub fn conv_transpose2d(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, ci, h, w) = input.dims4()?;
    let (wci, co) = check_kernel(weight, "conv_transpose2d")?;
    if wci != ci {
        return Err(Error::dim(format!(
            "conv_transpose2d: input has {ci} channels, weight expects {wci}"
        )));
    }
    check_bias(bias, co, "conv_transpose2d")?;
    let (oh, ow) = (2 * h, 2 * w);
    let (k, p) = (co * TAPS, h * w);
    let mut cols = vec![0.0; k * p];
    let mut out = vec![0.0; b * co * oh * ow];
    for s in 0..b {
        gemm(k, p, ci, weight.data(), 1, k, input.sample(s), &mut cols, false);
        let y = &mut out[s * co * oh * ow..(s + 1) * co * oh * ow];
        for (o, plane) in y.chunks_exact_mut(oh * ow).enumerate() {
            plane.fill(bias.data()[o]);
        }
        col2im_add(&cols, co, oh, ow, 2, h, w, y);
    }
    Tensor::new(&[b, co, oh, ow], out)
}

pub fn conv_transpose2d_backward(input: &Tensor, weight: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (b, ci, h, w) = input.dims4()?;
    let (_, co) = check_kernel(weight, "conv_transpose2d_backward")?;
    let (oh, ow) = (2 * h, 2 * w);
    if grad_out.shape() != [b, co, oh, ow] {
        return Err(Error::dim("conv_transpose2d_backward: grad_out shape mismatch"));
    }
    let (k, p) = (co * TAPS, h * w);
    let mut cols = vec![0.0; k * p];
    let mut cols_t = vec![0.0; p * k];
    let mut dx = vec![0.0; input.len()];
    let mut dw = vec![0.0; weight.len()];
    let mut db = vec![0.0; co];
    for s in 0..b {
        let dy = grad_out.sample(s);
        im2col(dy, co, oh, ow, 2, h, w, &mut cols);
        gemm(ci, p, k, weight.data(), k, 1, &cols, &mut dx[s * ci * p..(s + 1) * ci * p], false);
        transpose(&cols, k, p, &mut cols_t);
        gemm(ci, k, p, input.sample(s), p, 1, &cols_t, &mut dw, true);
        for (o, plane) in dy.chunks_exact(oh * ow).enumerate() {
            db[o] += plane.iter().sum::<f32>();
        }
    }
    Ok((
        Tensor::new(input.shape(), dx)?,
        Tensor::new(weight.shape(), dw)?,
        Tensor::new(&[co], db)?,
    ))
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.shape(), data).expect("same shape")
}

pub fn sigmoid_scalar(v: f32) -> f32 {
    1.0 / (1.0 + (-v).exp())
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

/// Takes the forward *output* `y`.
pub fn sigmoid_backward(y: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = y.data().iter().zip(grad_out.data()).map(|(&s, &g)| g * s * (1.0 - s)).collect();
    Tensor::new(y.shape(), data).expect("same shape")
}

/// `y[b, m] = x[b, n] · weightᵀ + bias`, with `weight` shaped `[m, n]`.
pub fn linear(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, n) = x.dims2()?;
    let (m, wn) = weight.dims2()?;
    if wn != n {
        return Err(Error::dim(format!("linear: input width {n}, weight expects {wn}")));
    }
    check_bias(bias, m, "linear")?;
    let mut w_t = vec![0.0; n * m];
    transpose(weight.data(), m, n, &mut w_t);
    let mut out = Vec::with_capacity(b * m);
    for _ in 0..b {
        out.extend_from_slice(bias.data());
    }
    gemm(b, m, n, x.data(), n, 1, &w_t, &mut out, true);
    Tensor::new(&[b, m], out)
}

pub fn linear_backward(x: &Tensor, weight: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (b, n) = x.dims2()?;
    let (m, _) = weight.dims2()?;
    if grad_out.shape() != [b, m] {
        return Err(Error::dim("linear_backward: grad_out shape mismatch"));
    }
    let mut dx = vec![0.0; b * n];
    gemm(b, n, m, grad_out.data(), m, 1, weight.data(), &mut dx, false);
    let mut dw = vec![0.0; m * n];
    gemm(m, n, b, grad_out.data(), 1, m, x.data(), &mut dw, false);
    let mut db = vec![0.0; m];
    for row in grad_out.data().chunks_exact(m) {
        for (d, g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    Ok((Tensor::new(&[b, n], dx)?, Tensor::new(&[m, n], dw)?, Tensor::new(&[m], db)?))
}

/// Concatenates two `[b, c, h, w]` tensors along channels.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (n, ca, h, w) = a.dims4()?;
    let (nb, cb, hb, wb) = b.dims4()?;
    if (n, h, w) != (nb, hb, wb) {
        return Err(Error::dim(format!("concat_channels: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    for s in 0..n {
        out.extend_from_slice(a.sample(s));
        out.extend_from_slice(b.sample(s));
    }
    Tensor::new(&[n, ca + cb, h, w], out)
}

pub fn concat_channels_backward(grad_out: &Tensor, ca: usize) -> Result<(Tensor, Tensor)> {
    let (n, c, h, w) = grad_out.dims4()?;
    let cb = c - ca;
    let mut ga = Vec::with_capacity(n * ca * h * w);
    let mut gb = Vec::with_capacity(n * cb * h * w);
    for s in 0..n {
        let (x, y) = grad_out.sample(s).split_at(ca * h * w);
        ga.extend_from_slice(x);
        gb.extend_from_slice(y);
    }
    Ok((Tensor::new(&[n, ca, h, w], ga)?, Tensor::new(&[n, cb, h, w], gb)?))
}

fn same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!("{what}: {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b, "add")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    Tensor::new(a.shape(), data)
}

pub fn sub(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape(a, b, "sub")?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    Tensor::new(a.shape(), data)
}

/// `[b, c, h, w] → [b, c]`, averaging each plane.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    let (b, c, h, w) = x.dims4()?;
    let hw = h * w;
    let inv = 1.0 / hw as f32;
    let data = x.data().chunks_exact(hw).map(|plane| plane.iter().sum::<f32>() * inv).collect();
    Tensor::new(&[b, c], data)
}

pub fn global_avg_pool_backward(grad_out: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (b, c) = grad_out.dims2()?;
    let inv = 1.0 / (h * w) as f32;
    let mut data = Vec::with_capacity(b * c * h * w);
    for &g in grad_out.data() {
        data.extend(std::iter::repeat_n(g * inv, h * w));
    }
    Tensor::new(&[b, c, h, w], data)
}

/// Replicates each entry of `[b, m]` over an `h × w` plane: `[b, m, h, w]`.
pub fn broadcast_spatial(x: &Tensor, h: usize, w: usize) -> Result<Tensor> {
    let (b, m) = x.dims2()?;
    let mut data = Vec::with_capacity(b * m * h * w);
    for &v in x.data() {
        data.extend(std::iter::repeat_n(v, h * w));
    }
    Tensor::new(&[b, m, h, w], data)
}

pub fn broadcast_spatial_backward(grad_out: &Tensor) -> Result<Tensor> {
    let (b, m, h, w) = grad_out.dims4()?;
    let data = grad_out.data().chunks_exact(h * w).map(|plane| plane.iter().sum::<f32>()).collect();
    Tensor::new(&[b, m], data)
}

/// Mean of `(a − b)²` over every element.
pub fn mse_loss(a: &Tensor, b: &Tensor) -> Result<f32> {
    same_shape(a, b, "mse_loss")?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum();
    Ok((sum / a.len() as f64) as f32)
}

/// Gradient of [`mse_loss`] with respect to `a`; the one for `b` is its negation.
pub fn mse_loss_backward(a: &Tensor, b: &Tensor, grad: f32) -> Tensor {
    let scale = 2.0 * grad / a.len() as f32;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| scale * (x - y)).collect();
    Tensor::new(a.shape(), data).expect("same shape")
}

pub fn mean(x: &Tensor) -> f32 {
    (x.data().iter().map(|&v| v as f64).sum::<f64>() / x.len() as f64) as f32
}

/// Natural log after clamping into `[eps, 1 − eps]`.
pub fn log_clamped(x: &Tensor, eps: f32) -> Tensor {
    x.map(|v| v.clamp(eps, 1.0 - eps).ln())
}

pub fn log_clamped_backward(x: &Tensor, grad_out: &Tensor, eps: f32) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > eps && v < 1.0 - eps { g / v } else { 0.0 })
        .collect();
    Tensor::new(x.shape(), data).expect("same shape")
}

/// Discriminator and generator adversarial terms for one pair of cover/stego
/// probabilities: `(L_D, L_G)` with `L_D = −[ln p_cover + ln(1 − p_stego)]`
/// and `L_G = ln(1 − p_stego)`.
pub fn adversarial_losses(p_cover: f32, p_stego: f32, eps: f32) -> (f32, f32) {
    let clamp = |p: f32| p.clamp(eps, 1.0 - eps);
    let l_g = clamp(1.0 - p_stego).ln();
    let l_d = -(clamp(p_cover).ln() + l_g);
    (l_d, l_g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct sextuple loop, independent of im2col and gemm.
    fn conv2d_loop(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize) -> Tensor {
        let (n, ci, h, wd) = x.dims4().unwrap();
        let co = w.shape()[0];
        let (ho, wo) = (conv_out_size(h, stride), conv_out_size(wd, stride));
        let mut out = Tensor::zeros(&[n, co, ho, wo]);
        for s in 0..n {
            for o in 0..co {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = b.data()[o] as f64;
                        for c in 0..ci {
                            for ky in 0..3 {
                                for kx in 0..3 {
                                    let iy = (oy * stride + ky) as isize - 1;
                                    let ix = (ox * stride + kx) as isize - 1;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                        continue;
                                    }
                                    let xv = x.data()[((s * ci + c) * h + iy as usize) * wd + ix as usize];
                                    let wv = w.data()[((o * ci + c) * 3 + ky) * 3 + kx];
                                    acc += xv as f64 * wv as f64;
                                }
                            }
                        }
                        out.data_mut()[((s * co + o) * ho + oy) * wo + ox] = acc as f32;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv2d_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for stride in [1, 2] {
            let x = Tensor::uniform(&[1, 2, 6, 6], -1.0, 1.0, &mut rng);
            let w = Tensor::uniform(&[3, 2, 3, 3], -1.0, 1.0, &mut rng);
            let b = Tensor::uniform(&[3], -1.0, 1.0, &mut rng);
            let y = conv2d(&x, &w, &b, stride).unwrap();
            let oracle = conv2d_loop(&x, &w, &b, stride);
            assert_eq!(y.shape(), oracle.shape());
            assert!(y.max_abs_diff(&oracle) < 1e-5);
        }
    }

    #[test]
    fn conv2d_halves_cover_block() {
        let x = Tensor::zeros(&[1, 3, 128, 128]);
        let w = Tensor::zeros(&[32, 3, 3, 3]);
        let b = Tensor::zeros(&[32]);
        let y = conv2d(&x, &w, &b, 2).unwrap();
        assert_eq!(y.shape(), &[1, 32, 64, 64]);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::uniform(&[2, 4, 8, 8], -3.0, 3.0, &mut rng);
        let y = conv2d(&x, &Tensor::zeros(&[5, 4, 3, 3]), &Tensor::zeros(&[5]), 2).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv2d_rejects_bad_shapes() {
        let x = Tensor::zeros(&[1, 3, 8, 8]);
        let b = Tensor::zeros(&[4]);
        assert!(conv2d(&x, &Tensor::zeros(&[4, 2, 3, 3]), &b, 2).is_err());
        assert!(conv2d(&x, &Tensor::zeros(&[4, 3, 3, 3]), &Tensor::zeros(&[3]), 2).is_err());
        let odd = Tensor::zeros(&[1, 3, 7, 7]);
        assert!(conv2d(&odd, &Tensor::zeros(&[4, 3, 3, 3]), &b, 2).is_err());
    }

    #[test]
    fn transposed_conv_doubles_decoder_stage() {
        let x = Tensor::zeros(&[1, 256, 8, 8]);
        let w = Tensor::zeros(&[256, 128, 3, 3]);
        let y = conv_transpose2d(&x, &w, &Tensor::zeros(&[128])).unwrap();
        assert_eq!(y.shape(), &[1, 128, 16, 16]);
    }

    #[test]
    fn transposed_conv_of_zero_is_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = Tensor::uniform(&[2, 3, 3, 3], -1.0, 1.0, &mut rng);
        let bias = Tensor::new(&[3], vec![0.5, -1.0, 2.0]).unwrap();
        let y = conv_transpose2d(&Tensor::zeros(&[1, 2, 4, 4]), &w, &bias).unwrap();
        for (c, plane) in y.data().chunks_exact(64).enumerate() {
            assert!(plane.iter().all(|&v| v == bias.data()[c]));
        }
        assert!(conv_transpose2d(&Tensor::zeros(&[1, 3, 4, 4]), &w, &bias).is_err());
    }

    #[test]
    fn transposed_conv_is_conv_input_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // conv: [1, 3, 8, 8] -> [1, 2, 4, 4]; weight [2, 3, 3, 3]
        let w = Tensor::uniform(&[2, 3, 3, 3], -1.0, 1.0, &mut rng);
        let y = Tensor::uniform(&[1, 2, 4, 4], -1.0, 1.0, &mut rng);
        let x = Tensor::zeros(&[1, 3, 8, 8]);
        let (dx, _, _) = conv2d_backward(&x, &w, &y, 2).unwrap();
        let t = conv_transpose2d(&y, &w, &Tensor::zeros(&[3])).unwrap();
        assert_eq!(t.shape(), dx.shape());
        assert!(t.max_abs_diff(&dx) < 1e-6);
    }

    #[test]
    fn elementwise_values() {
        let x = Tensor::new(&[2], vec![-1.5, 2.0]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 2.0]);
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!(sigmoid(&Tensor::new(&[2], vec![-200.0, 200.0]).unwrap()).is_finite());
    }

    #[test]
    fn linear_matches_dot_products() {
        let x = Tensor::new(&[1, 4], vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let w = Tensor::new(&[2, 4], vec![0.5, -1.0, 2.0, 4.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = Tensor::new(&[2], vec![0.25, -2.0]).unwrap();
        let y = linear(&x, &w, &b).unwrap();
        // 0.5 - 2 - 2 + 2 + 0.25 ; 1 + 2 - 1 + 0.5 - 2
        assert_eq!(y.data(), &[-1.25, 0.5]);
    }

    #[test]
    fn mse_hand_values() {
        let a = Tensor::new(&[2], vec![1.0, 1.0]).unwrap();
        let b = Tensor::new(&[2], vec![0.0, 2.0]).unwrap();
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
        assert_eq!(mse_loss(&a, &b).unwrap(), 1.0);
        assert!(mse_loss(&a, &Tensor::zeros(&[3])).is_err());
    }

    #[test]
    fn mse_matches_loop_on_random_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Tensor::uniform(&[3, 3], -1.0, 1.0, &mut rng);
        let b = Tensor::uniform(&[3, 3], -1.0, 1.0, &mut rng);
        let mut s = 0.0f64;
        for i in 0..9 {
            let d = a.data()[i] as f64 - b.data()[i] as f64;
            s += d * d;
        }
        assert!((mse_loss(&a, &b).unwrap() as f64 - s / 9.0).abs() < 1e-7);
    }

    #[test]
    fn adversarial_loss_values() {
        let (_, l_g) = adversarial_losses(0.5, 0.5, 1e-6);
        assert!((l_g - 0.5f32.ln()).abs() < 1e-7);
        assert!((l_g + std::f32::consts::LN_2).abs() < 1e-4);
        let (l_d, _) = adversarial_losses(1.0, 0.0, 1e-6);
        assert!((0.0..1e-5).contains(&l_d));
        assert!(adversarial_losses(0.0, 1.0, 1e-6).0.is_finite());
    }

    #[test]
    fn pooling_and_broadcast_are_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor::uniform(&[2, 3], -1.0, 1.0, &mut rng);
        let y = Tensor::uniform(&[2, 3, 4, 4], -1.0, 1.0, &mut rng);
        let bx = broadcast_spatial(&x, 4, 4).unwrap();
        let by = broadcast_spatial_backward(&y).unwrap();
        assert!((bx.dot(&y) - x.dot(&by)).abs() < 1e-4);
        let p = global_avg_pool(&y).unwrap();
        assert_eq!(p.shape(), &[2, 3]);
        let mean0: f32 = y.data()[..16].iter().sum::<f32>() / 16.0;
        assert!((p.data()[0] - mean0).abs() < 1e-6);
    }
}
