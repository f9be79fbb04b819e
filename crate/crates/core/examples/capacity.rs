//! Feature-capacity ratio, bits per pixel and model size for common settings.

use mshidden::codec::capacity;
use mshidden::model::{bits_per_pixel, feature_capacity, model_complexity, ModelConfig};

fn main() -> mshidden::Result<()> {
    println!(
        "{:>5} {:>2} {:>4} {:>8} {:>8} {:>10} {:>10}",
        "B", "k", "|M|", "rho", "bpp", "params", "GFLOPS"
    );
    for (b, k, m) in [(32, 3, 16), (32, 3, 32), (64, 4, 64), (128, 4, 64), (128, 4, 128), (128, 5, 128)] {
        let cfg = ModelConfig::new(b, k, m)?;
        let fc = feature_capacity(k, m);
        let (n, d) = fc.rho_fraction();
        let c = model_complexity(&cfg)?;
        println!(
            "{b:>5} {k:>2} {m:>4} {:>8} {:>8.4} {:>10} {:>10.4}",
            format!("{n}/{d}"),
            bits_per_pixel(b, m),
            c.param_count(),
            c.flops_per_block as f64 / 1e9
        );
    }

    let cfg = ModelConfig::new(32, 3, 16)?;
    let cap = capacity(1920, 1080, &cfg);
    println!(
        "\n1920x1080 at (32,3,16): {} blocks, {} carry payload, {} bits, max payload {:?} bytes",
        cap.blocks,
        cap.payload_blocks,
        cap.bits,
        cap.max_payload_bytes()
    );
    Ok(())
}
