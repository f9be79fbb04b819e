//! The user-facing pipeline: framing, block tiling, image files, and
//! embedding/extraction over whole images.

pub mod blocks;
pub mod frame;
pub mod image_io;
pub mod pipeline;

pub use blocks::{plan_blocks, tile, untile, BlockLayout};
pub use frame::{frame_bits, frame_decode, frame_encode, FrameError};
pub use image_io::{ensure_lossless, quantize, quantize_value, read_image, to_tensor, write_image};
pub use pipeline::{capacity, embed_message, extract_message, Capacity, Embedded, Extraction, DEFAULT_FILLER_SEED};
