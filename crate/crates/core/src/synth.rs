//! Procedural cover images: a color gradient, a few oriented gratings, soft
//! discs and rectangles, and mild noise. Enough texture and edge variety to
//! train and benchmark at desk scale without an external dataset.

use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::write_image;
use crate::error::Result;

pub fn synth_image(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f32, height as f32);
    let color = |rng: &mut ChaCha8Rng| [rng.gen::<f32>(), rng.gen::<f32>(), rng.gen::<f32>()];

    let c0 = color(&mut rng);
    let c1 = color(&mut rng);
    let angle: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
    let (gx, gy) = (angle.cos(), angle.sin());

    let gratings: Vec<_> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let a: f32 = rng.gen_range(0.0..std::f32::consts::TAU);
            let period = rng.gen_range(3.0..w.max(h).max(4.0));
            let k = std::f32::consts::TAU / period;
            (
                a.cos() * k,
                a.sin() * k,
                rng.gen_range(0.0..6.3f32),
                rng.gen_range(0.03..0.15f32),
                color(&mut rng),
            )
        })
        .collect();

    // (cx, cy, rx, ry, is_disc, color, edge softness)
    let shapes: Vec<_> = (0..rng.gen_range(0..=4))
        .map(|_| {
            (
                rng.gen_range(0.0..w),
                rng.gen_range(0.0..h),
                rng.gen_range(w * 0.08..w * 0.45),
                rng.gen_range(h * 0.08..h * 0.45),
                rng.gen::<bool>(),
                color(&mut rng),
                rng.gen_range(0.5..3.0f32),
            )
        })
        .collect();
    let noise = rng.gen_range(0.0..0.04f32);

    RgbImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f32 + 0.5, y as f32 + 0.5);
        let t = ((xf / w - 0.5) * gx + (yf / h - 0.5) * gy + 0.5).clamp(0.0, 1.0);
        let mut px = [0.0f32; 3];
        for c in 0..3 {
            px[c] = c0[c] * (1.0 - t) + c1[c] * t;
        }
        for &(kx, ky, phase, amp, col) in &gratings {
            let s = (kx * xf + ky * yf + phase).sin() * amp;
            for c in 0..3 {
                px[c] += s * (col[c] - 0.5) * 2.0;
            }
        }
        for &(cx, cy, rx, ry, disc, col, soft) in &shapes {
            let (dx, dy) = ((xf - cx) / rx, (yf - cy) / ry);
            let dist = if disc { (dx * dx + dy * dy).sqrt() } else { dx.abs().max(dy.abs()) };
            let alpha = ((1.0 - dist) * rx.min(ry) / soft).clamp(0.0, 1.0);
            for c in 0..3 {
                px[c] = px[c] * (1.0 - alpha) + col[c] * alpha;
            }
        }
        let mut out = [0u8; 3];
        for c in 0..3 {
            let n = if noise > 0.0 { rng.gen_range(-noise..noise) } else { 0.0 };
            out[c] = ((px[c] + n) * 255.0).round().clamp(0.0, 255.0) as u8;
        }
        image::Rgb(out)
    })
}

/// `count` named images; image `i` uses seed `seed + i`.
pub fn synth_images(count: usize, width: u32, height: u32, seed: u64) -> Vec<(String, RgbImage)> {
    (0..count)
        .map(|i| (format!("synth_{i:05}.png"), synth_image(width, height, seed.wrapping_add(i as u64))))
        .collect()
}

/// Writes [`synth_images`] as PNGs into `dir`, creating it if needed.
pub fn write_synth_dataset(dir: &Path, count: usize, width: u32, height: u32, seed: u64) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    synth_images(count, width, height, seed)
        .into_iter()
        .map(|(name, img)| {
            let p = dir.join(name);
            write_image(&p, &img)?;
            Ok(p)
        })
        .collect()
}
