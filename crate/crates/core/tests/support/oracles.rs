//! Direct-loop metric oracles, independent of the library's implementations.

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mshidden::synth::synth_image;

pub fn loop_psnr_mae(a: &RgbImage, b: &RgbImage) -> (f64, f64) {
    let (w, h) = a.dimensions();
    let (mut sq, mut abs) = (0.0f64, 0.0f64);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let d = a.get_pixel(x, y)[c] as f64 - b.get_pixel(x, y)[c] as f64;
                sq += d * d;
                abs += d.abs();
            }
        }
    }
    let n = (w * h * 3) as f64;
    let mse = sq / n;
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * 255f64.log10() - 10.0 * mse.log10()
    };
    (psnr, abs / n)
}

/// SSIM straight from its definition: for every window, Gaussian-weighted
/// means, variances and covariance summed over the full 11×11 neighbourhood.
#[allow(clippy::needless_range_loop)]
pub fn direct_ssim(a: &RgbImage, b: &RgbImage) -> f64 {
    let (w, h) = (a.width() as usize, a.height() as usize);
    let y = |img: &RgbImage, px: usize, py: usize| {
        let p = img.get_pixel(px as u32, py as u32);
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };
    let mut weights = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for (i, row) in weights.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
            *v = (-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)).exp();
            total += *v;
        }
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut sum = 0.0;
    let mut count = 0;
    for oy in 0..=h - 11 {
        for ox in 0..=w - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let g = weights[i][j] / total;
                    mx += g * y(a, ox + j, oy + i);
                    my += g * y(b, ox + j, oy + i);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let g = weights[i][j] / total;
                    let dx = y(a, ox + j, oy + i) - mx;
                    let dy = y(b, ox + j, oy + i) - my;
                    vx += g * dx * dx;
                    vy += g * dy * dy;
                    cxy += g * dx * dy;
                }
            }
            sum += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Twenty deterministic (cover, distorted) pairs of varied size and damage.
pub fn fixture_pairs() -> Vec<(RgbImage, RgbImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|i| {
            let w = 11 + (i * 7) % 40;
            let h = 11 + (i * 13) % 33;
            let a = synth_image(w, h, 500 + i as u64);
            let mut b = a.clone();
            let amp: i32 = [1, 2, 5, 20, 60][i as usize % 5];
            for p in b.pixels_mut() {
                for c in 0..3 {
                    let v = p[c] as i32 + rng.gen_range(-amp..=amp) + (i as i32 % 3 - 1) * 4;
                    p[c] = v.clamp(0, 255) as u8;
                }
            }
            (a, b)
        })
        .collect()
}
