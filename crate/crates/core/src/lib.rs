//! Multi-scale autoencoder image steganography.
//!
//! An embedder network hides a fixed number of message bits in a square image
//! block; an extractor recovers them; a discriminator is trained against the
//! embedder so that stego blocks stay indistinguishable from covers. Around
//! the networks sit a small differentiable tensor engine ([`tensor`]), the
//! adversarial trainer ([`train`]), a block-tiled byte-message codec
//! ([`codec`]) and quality metrics and benchmark runners ([`metrics`]).

pub mod cli;
pub mod codec;
pub mod error;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
