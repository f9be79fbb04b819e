//! Builds a model, saves it, loads it back and lists its named tensors.

use mshidden::model::{ModelConfig, StegoModels};
use mshidden::train::{load_checkpoint, save_checkpoint, Checkpoint};

fn main() -> mshidden::Result<()> {
    let cfg = ModelConfig::new(16, 2, 8)?.with_seed(9);
    let ckpt = Checkpoint::new(StegoModels::new(cfg)?);
    let path = std::env::temp_dir().join("mshidden_example.mshd");
    save_checkpoint(&ckpt, &path)?;
    let back = load_checkpoint(&path)?;
    assert_eq!(back, ckpt);
    println!("{} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    for (net, params) in [
        ("embedder", back.models.embedder.params()),
        ("extractor", back.models.extractor.params()),
        ("discriminator", back.models.discriminator.params()),
    ] {
        println!("{net}: {} tensors, {} parameters", params.len(), params.param_count());
        for (name, t) in params.iter() {
            println!("  {name:<28} {:?}", t.shape());
        }
    }
    Ok(())
}
