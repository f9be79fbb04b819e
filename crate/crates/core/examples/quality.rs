//! PSNR, SSIM and MAE of a cover against increasingly noisy copies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mshidden::metrics::{mae, psnr, ssim};
use mshidden::synth::synth_image;

fn main() -> mshidden::Result<()> {
    let cover = synth_image(96, 96, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("{:>5} {:>9} {:>7} {:>6}", "noise", "PSNR dB", "SSIM", "MAE");
    for amp in [0, 1, 2, 4, 8, 16, 32] {
        let mut noisy = cover.clone();
        for p in noisy.pixels_mut() {
            for c in 0..3 {
                p[c] = (p[c] as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8;
            }
        }
        println!(
            "{amp:>5} {:>9.2} {:>7.4} {:>6.3}",
            psnr(&cover, &noisy)?,
            ssim(&cover, &noisy)?,
            mae(&cover, &noisy)?
        );
    }
    Ok(())
}
