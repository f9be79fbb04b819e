//! Trains a (32,3,16) model on synthetic 40x40 images and writes the best
//! checkpoint, the final one and a CSV log.
//!
//! cargo run --release --example train_desk -- [out.mshd] [images] [epochs]

use std::path::PathBuf;

use mshidden::model::ModelConfig;
use mshidden::synth::synth_images;
use mshidden::train::{train, Dataset, TrainOutputs, TrainRun};

fn main() -> mshidden::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("desk.mshd", String::as_str));
    let images: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1024);
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);

    let data = Dataset::from_images(synth_images(images, 40, 40, 100));
    let mut run = TrainRun::new(ModelConfig::new(32, 3, 16)?);
    run.epochs = epochs;
    run.batch_size = 8;
    let outputs = TrainOutputs::beside(&out);
    let result = train(&run, &data, Some(&outputs), |r| {
        println!(
            "epoch {:>3}  E {:.5}  L_D {:.4}  val BER {:.4}  val PSNR {:.2} dB",
            r.epoch, r.total, r.discriminator, r.val.ber, r.val.psnr_db
        );
    })?;
    let best = result.best.best.expect("at least one epoch");
    println!(
        "best epoch {} (BER {:.4}, PSNR {:.2} dB) -> {}",
        best.epoch,
        best.ber,
        best.psnr,
        outputs.best.display()
    );
    Ok(())
}
