//! Hides a text in a synthetic cover with the stored fixture model, writes
//! the stego PNG and the x15 difference image, and reads the text back.

use std::path::Path;

use mshidden::codec::{embed_message, extract_message, read_image, write_image, DEFAULT_FILLER_SEED};
use mshidden::metrics::{diff_image, psnr};
use mshidden::synth::synth_image;
use mshidden::train::load_checkpoint;

fn main() -> mshidden::Result<()> {
    let model = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny.mshd");
    let ckpt = load_checkpoint(&model)?;
    let cover = synth_image(128, 96, 5);
    let text = b"meet at the north gate at noon";

    let emb = embed_message(&ckpt.models, &cover, text, DEFAULT_FILLER_SEED)?;
    println!(
        "{} of {} bits used, max payload {:?} bytes, PSNR {:.2} dB",
        emb.frame_bits,
        emb.capacity.bits,
        emb.capacity.max_payload_bytes(),
        psnr(&cover, &emb.stego)?
    );

    let dir = std::env::temp_dir();
    let stego_path = dir.join("mshidden_stego.png");
    write_image(&stego_path, &emb.stego)?;
    write_image(&dir.join("mshidden_diff.png"), &diff_image(&cover, &emb.stego, 15)?)?;

    let stego = read_image(&stego_path)?.image;
    let back = extract_message(&ckpt.models, &stego)?;
    println!("recovered: {}", String::from_utf8_lossy(&back.payload));
    assert_eq!(back.payload, text);
    Ok(())
}
