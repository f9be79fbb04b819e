//! Benchmarks the fixture model against the identity stub on synthetic
//! covers and prints the JSON report.

use std::path::Path;

use mshidden::metrics::{bench, BenchOptions, IdentityStub};
use mshidden::synth::synth_images;
use mshidden::train::{load_checkpoint, Dataset};

fn main() -> mshidden::Result<()> {
    let ckpt = load_checkpoint(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny.mshd"))?;
    let data = Dataset::from_images(synth_images(6, 64, 48, 31));
    let opts = BenchOptions {
        repeats: 8,
        ..BenchOptions::default()
    };

    let stub = bench(&IdentityStub { block: 8, msg_bits: 4 }, &data, "synthetic", &opts)?;
    println!("identity stub: BER {:.4}, PSNR {}", stub.ber, stub.psnr_db);

    let report = bench(&ckpt.models, &data, "synthetic", &opts)?;
    println!("{}", report.to_json()?);
    Ok(())
}
