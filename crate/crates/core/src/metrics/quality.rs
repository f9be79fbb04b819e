//! Cover-vs-stego distortion and bit accuracy.

use image::RgbImage;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

fn same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::dim(format!(
            "image sizes differ: {:?} vs {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    Ok(())
}

/// Mean squared error over all subpixels, in 8-bit units squared.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let sum: f64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.as_raw().len().max(1) as f64)
}

/// `10·log10(255² / MSE)`; `+∞` for identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, 255.0))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// PSNR of unquantized `[.., 3, h, w]` tensors in `[0, 1]` (peak 1).
pub fn psnr_float(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!("shapes differ: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let sum: f64 = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    Ok(psnr_from_mse(sum / a.len().max(1) as f64, 1.0))
}

/// Mean absolute subpixel difference, in 8-bit units.
pub fn mae(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let sum: u64 = a.as_raw().iter().zip(b.as_raw()).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
    Ok(sum as f64 / a.as_raw().len().max(1) as f64)
}

/// Hamming distance over length. Any nonzero value counts as a 1.
pub fn ber(bits: &[u8], other: &[u8]) -> Result<f64> {
    if bits.len() != other.len() {
        return Err(Error::dim(format!(
            "bit strings differ in length: {} vs {}",
            bits.len(),
            other.len()
        )));
    }
    if bits.is_empty() {
        return Ok(0.0);
    }
    let wrong = bits.iter().zip(other).filter(|(&x, &y)| (x != 0) != (y != 0)).count();
    Ok(wrong as f64 / bits.len() as f64)
}

/// BT.601 luma, row-major.
pub fn luma(img: &RgbImage) -> Vec<f64> {
    img.pixels()
        .map(|p| 0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64)
        .collect()
}

pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of a `w×h` plane.
fn filter_valid(x: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for ox in 0..ow {
            rows[y * ow + ox] = k.iter().enumerate().map(|(i, &kv)| kv * x[y * w + ox + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for oy in 0..oh {
        for ox in 0..ow {
            out[oy * ow + ox] = k.iter().enumerate().map(|(i, &kv)| kv * rows[(oy + i) * ow + ox]).sum();
        }
    }
    out
}

/// Mean SSIM over all valid 11×11 Gaussian (σ 1.5) windows of the luma plane.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::dim(format!(
            "image {w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    if a == b {
        return Ok(1.0);
    }
    let (x, y) = (luma(a), luma(b));
    let k = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(u, v)| u * v).collect() };
    let mx = filter_valid(&x, w, h, &k);
    let my = filter_valid(&y, w, h, &k);
    let sxx = filter_valid(&prod(&x, &x), w, h, &k);
    let syy = filter_valid(&prod(&y, &y), w, h, &k);
    let sxy = filter_valid(&prod(&x, &y), w, h, &k);
    let (c1, c2) = ((K1 * L).powi(2), (K2 * L).powi(2));
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cxy = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

/// `|a − b| · scale`, saturating at 255.
pub fn diff_image(a: &RgbImage, b: &RgbImage, scale: u32) -> Result<RgbImage> {
    same_dims(a, b)?;
    let raw = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| (x.abs_diff(y) as u32 * scale).min(255) as u8)
        .collect();
    Ok(RgbImage::from_raw(a.width(), a.height(), raw).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: u32, h: u32, f: impl Fn(u32, u32, usize) -> u8) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| image::Rgb([f(x, y, 0), f(x, y, 1), f(x, y, 2)]))
    }

    #[test]
    fn identical() {
        let a = img(16, 12, |x, y, c| (x * 7 + y * 3 + c as u32 * 40) as u8);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert_eq!(ber(&[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(ber(&[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn unit_difference_closed_form() {
        let a = img(9, 7, |x, y, c| (1 + x * 20 + y + c as u32) as u8);
        let b = img(9, 7, |x, y, c| {
            let v = 1 + x * 20 + y + c as u32;
            if (x + y + c as u32).is_multiple_of(2) {
                v + 1
            } else {
                v - 1
            }
        } as u8);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        assert_eq!(mae(&a, &b).unwrap(), 1.0);
        assert_eq!(format!("{:.2}", psnr(&a, &b).unwrap()), "48.13");
    }

    #[test]
    fn mismatched_dims() {
        assert!(psnr(&RgbImage::new(2, 2), &RgbImage::new(2, 3)).is_err());
        assert!(ssim(&RgbImage::new(10, 20), &RgbImage::new(10, 20)).is_err());
        assert!(ber(&[1], &[1, 0]).is_err());
    }
}
