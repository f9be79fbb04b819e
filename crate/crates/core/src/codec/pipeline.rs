//! Byte messages in, stego images out, and back.
//!
//! Frame bits are cut into `|M|`-bit chunks and assigned to the fully-interior
//! blocks in row-major order. Every other message slot (the tail of the last
//! chunk, unused interior blocks, blocks that reach into the padding) carries
//! seeded random filler, so all blocks see the random-message statistics the
//! networks were trained on and bits lost to cropping never belong to the
//! frame.

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::blocks::{plan_blocks, tile, untile, BlockLayout};
use super::frame::{frame_bits, frame_decode_soft, frame_encode, OVERHEAD_BYTES};
use super::image_io::{quantize, to_tensor};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, StegoModels};
use crate::tensor::Tensor;

pub const DEFAULT_FILLER_SEED: u64 = 0x4d53_4649;

/// Blocks pushed through a network at once.
const CHUNK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capacity {
    pub blocks: usize,
    pub payload_blocks: usize,
    /// Message bits available to the frame.
    pub bits: usize,
}

impl Capacity {
    /// `None` when not even an empty frame fits.
    pub fn max_payload_bytes(&self) -> Option<usize> {
        (self.bits / 8).checked_sub(OVERHEAD_BYTES)
    }
}

pub fn capacity(width: usize, height: usize, cfg: &ModelConfig) -> Capacity {
    let layout = plan_blocks(width, height, cfg.block);
    let payload_blocks = layout.interior().len();
    Capacity {
        blocks: layout.block_count(),
        payload_blocks,
        bits: payload_blocks * cfg.msg_bits,
    }
}

#[derive(Clone, Debug)]
pub struct Embedded {
    pub stego: RgbImage,
    /// Stego before 8-bit quantization, `[3, h, w]`.
    pub stego_float: Tensor,
    pub layout: BlockLayout,
    pub capacity: Capacity,
    pub frame_bits: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub payload: Vec<u8>,
    pub frame_bits: usize,
    pub bits_read: usize,
}

/// Runs `f` over `[n, ...]` in batches of [`CHUNK`] and concatenates.
pub(crate) fn chunked(inputs: &[&Tensor], mut f: impl FnMut(&[Tensor]) -> Result<Tensor>) -> Result<Tensor> {
    let n = inputs[0].shape()[0];
    let mut outs = Vec::new();
    for lo in (0..n).step_by(CHUNK) {
        let hi = (lo + CHUNK).min(n);
        let parts: Vec<Tensor> = inputs.iter().map(|t| batch_range(t, lo, hi)).collect();
        outs.push(f(&parts)?);
    }
    Tensor::cat_batch(&outs)
}

pub(crate) fn batch_range(t: &Tensor, lo: usize, hi: usize) -> Tensor {
    let per = t.len() / t.shape()[0];
    let mut shape = t.shape().to_vec();
    shape[0] = hi - lo;
    Tensor::new(&shape, t.data()[lo * per..hi * per].to_vec()).unwrap()
}

/// Lays out the frame over the blocks of `layout`, returning `[n, |M|]`.
pub fn message_matrix(layout: &BlockLayout, msg_bits: usize, frame: &[u8], seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior = layout.interior();
    let mut slot = vec![None; layout.block_count()];
    for (rank, &i) in interior.iter().enumerate() {
        slot[i] = Some(rank);
    }
    let mut data = Vec::with_capacity(layout.block_count() * msg_bits);
    for s in slot {
        for j in 0..msg_bits {
            let bit = match s.map(|rank| rank * msg_bits + j).and_then(|p| frame.get(p)) {
                Some(&b) => b,
                None => rng.gen::<bool>() as u8,
            };
            data.push(bit as f32);
        }
    }
    Tensor::new(&[layout.block_count(), msg_bits], data).unwrap()
}

pub fn embed_message(models: &StegoModels, cover: &RgbImage, payload: &[u8], seed: u64) -> Result<Embedded> {
    let cfg = models.config();
    let (w, h) = (cover.width() as usize, cover.height() as usize);
    let layout = plan_blocks(w, h, cfg.block);
    let capacity = capacity(w, h, cfg);
    let required = frame_bits(payload.len());
    if required > capacity.bits {
        return Err(Error::Capacity {
            required,
            available: capacity.bits,
        });
    }
    let frame = frame_encode(payload);
    let msgs = message_matrix(&layout, cfg.msg_bits, &frame, seed);
    let blocks = tile(&to_tensor(cover), &layout)?;
    let stego_blocks = chunked(&[&blocks, &msgs], |p| models.embedder.forward(&p[0], &p[1]))?;
    let stego_float = untile(&stego_blocks, &layout)?;
    Ok(Embedded {
        stego: quantize(&stego_float)?,
        stego_float,
        layout,
        capacity,
        frame_bits: required,
    })
}

/// Extractor logits for the interior blocks of `img` (`[3, h, w]`),
/// flattened in row-major block order.
pub fn read_logits(models: &StegoModels, img: &Tensor, layout: &BlockLayout) -> Result<Vec<f32>> {
    let blocks = tile(img, layout)?;
    let interior = layout.interior();
    let per = blocks.len() / blocks.shape()[0];
    let mut data = Vec::with_capacity(interior.len() * per);
    for &i in &interior {
        data.extend_from_slice(blocks.sample(i));
    }
    let b = layout.block;
    let picked = Tensor::new(&[interior.len(), 3, b, b], data)?;
    Ok(chunked(&[&picked], |p| models.extractor.forward(&p[0]))?.into_data())
}

pub fn extract_message(models: &StegoModels, stego: &RgbImage) -> Result<Extraction> {
    let cfg = models.config();
    let (w, h) = (stego.width() as usize, stego.height() as usize);
    if w < cfg.block || h < cfg.block {
        return Err(Error::dim(format!(
            "stego image {w}x{h} is smaller than the model block size {}",
            cfg.block
        )));
    }
    let layout = plan_blocks(w, h, cfg.block);
    let logits = read_logits(models, &to_tensor(stego), &layout)?;
    let bits: Vec<u8> = logits.iter().map(|&v| u8::from(v > 0.0)).collect();
    let payload = frame_decode_soft(&bits, &logits)?;
    Ok(Extraction {
        frame_bits: frame_bits(payload.len()),
        bits_read: bits.len(),
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_of_a_1280_square_image() {
        let cfg = ModelConfig::default();
        let c = capacity(1280, 1280, &cfg);
        assert_eq!((c.blocks, c.bits), (100, 6400));
        assert_eq!(c.max_payload_bytes(), Some(790));
        assert!(c.max_payload_bytes().unwrap() >= 127);
    }

    #[test]
    fn frame_lands_on_interior_blocks_only() {
        let layout = plan_blocks(20, 12, 8); // 3x2 blocks, interior 0 and 1
        let frame = vec![1u8; 12];
        let m = message_matrix(&layout, 8, &frame, 1);
        assert_eq!(&m.data()[..12], &[1.0; 12]);
        assert_eq!(m, message_matrix(&layout, 8, &frame, 1));
        assert_ne!(m, message_matrix(&layout, 8, &frame, 2));
    }

    #[test]
    fn capacity_boundary() {
        let cfg = ModelConfig::new(8, 2, 4).unwrap();
        let models = StegoModels::new(cfg).unwrap();
        let cover = RgbImage::from_pixel(32, 24, image::Rgb([120, 90, 60]));
        let c = capacity(32, 24, &cfg);
        assert_eq!(c.bits, 12 * 4);
        assert_eq!(c.max_payload_bytes(), None);
        assert!(matches!(
            embed_message(&models, &cover, b"", 0),
            Err(Error::Capacity {
                required: 80,
                available: 48
            })
        ));
    }
}
