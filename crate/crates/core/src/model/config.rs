use crate::error::{Error, Result};
use crate::tensor::AdamConfig;

/// One experiment: block geometry, message length, loss weights, optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    /// Block edge length `B` in pixels.
    pub block: usize,
    /// Number of stride-2 downsampling layers.
    pub k: usize,
    pub msg_bits: usize,
    pub lambda_i: f32,
    pub lambda_m: f32,
    pub lambda_g: f32,
    pub adam: AdamConfig,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 0x4d53_4844;

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            block: 128,
            k: 4,
            msg_bits: 64,
            lambda_i: 1.0,
            lambda_m: 1.5,
            lambda_g: 0.001,
            adam: AdamConfig::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl ModelConfig {
    pub fn new(block: usize, k: usize, msg_bits: usize) -> Result<Self> {
        let cfg = Self {
            block,
            k,
            msg_bits,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > 12 {
            return Err(Error::Config(format!("k must be in 1..=12, got {}", self.k)));
        }
        let scale = 1usize << self.k;
        if self.block < scale || !self.block.is_multiple_of(scale) {
            return Err(Error::Config(format!(
                "block size {} must be a positive multiple of 2^k = {scale}",
                self.block
            )));
        }
        if self.msg_bits == 0 {
            return Err(Error::Config("msg_bits must be at least 1".into()));
        }
        let weights = [self.lambda_i, self.lambda_m, self.lambda_g, self.adam.lr];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("loss weights and lr must be finite and ≥ 0".into()));
        }
        Ok(())
    }

    /// Output channels of encoder layer `i` (0-based): `2^(k+1+i)`, ending at `(2^k)²`.
    pub fn encoder_channels(&self) -> Vec<usize> {
        (0..self.k).map(|i| 1 << (self.k + 1 + i)).collect()
    }

    /// Feature channels at the bottleneck, `f_c = (2^k)²`.
    pub fn feature_channels(&self) -> usize {
        1 << (2 * self.k)
    }

    /// Channels entering the decoder: `f_c + |M|`.
    pub fn bottleneck_channels(&self) -> usize {
        self.feature_channels() + self.msg_bits
    }

    /// Spatial size of the bottleneck, `B / 2^k`.
    pub fn bottleneck_size(&self) -> usize {
        self.block >> self.k
    }

    /// Output channels of the decoder layers, mirroring the encoder down to RGB.
    pub fn decoder_channels(&self) -> Vec<usize> {
        let mut enc = self.encoder_channels();
        enc.pop();
        enc.reverse();
        enc.push(3);
        enc
    }
}
