//! Feature-capacity ratio, embedding rate and model complexity.

use super::networks::{discriminator_specs, embedder_specs, extractor_specs, LayerKind};
use super::{ModelConfig, StegoModels};
use crate::error::Result;

/// Message channels versus feature channels at the bottleneck.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureCapacity {
    pub k: usize,
    pub msg_bits: usize,
    /// `f_c = (2^k)²`
    pub feature_channels: usize,
    /// `m_c = |M|`
    pub message_channels: usize,
}

impl FeatureCapacity {
    /// `ρ = m_c / f_c`.
    pub fn rho(&self) -> f64 {
        self.message_channels as f64 / self.feature_channels as f64
    }

    /// `ρ` as an exact reduced fraction.
    pub fn rho_fraction(&self) -> (u64, u64) {
        reduce(self.message_channels as u64, self.feature_channels as u64)
    }
}

pub fn feature_capacity(k: usize, msg_bits: usize) -> FeatureCapacity {
    assert!(k >= 1 && msg_bits >= 1, "k and msg_bits must be positive");
    FeatureCapacity {
        k,
        msg_bits,
        feature_channels: 1 << (2 * k),
        message_channels: msg_bits,
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn reduce(n: u64, d: u64) -> (u64, u64) {
    let g = gcd(n, d).max(1);
    (n / g, d / g)
}

/// Embedded bits per subpixel of one `B×B` RGB block: `|M| / (3·B²)`.
pub fn bits_per_pixel(block: usize, msg_bits: usize) -> f64 {
    msg_bits as f64 / (3 * block * block) as f64
}

pub fn bits_per_pixel_fraction(block: usize, msg_bits: usize) -> (u64, u64) {
    reduce(msg_bits as u64, (3 * block * block) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Complexity {
    pub embedder_params: usize,
    pub extractor_params: usize,
    pub discriminator_params: usize,
    /// 2 × multiply-accumulates of one embedder pass over one block.
    pub flops_per_block: u64,
}

impl Complexity {
    pub fn param_count(&self) -> usize {
        self.embedder_params + self.extractor_params + self.discriminator_params
    }
}

/// Counts parameters by instantiating the three networks, and embedder
/// FLOPs from the layer table.
pub fn model_complexity(cfg: &ModelConfig) -> Result<Complexity> {
    let models = StegoModels::new(*cfg)?;
    Ok(Complexity {
        embedder_params: models.embedder.params().param_count(),
        extractor_params: models.extractor.params().param_count(),
        discriminator_params: models.discriminator.params().param_count(),
        flops_per_block: embed_flops(cfg),
    })
}

/// Parameter count from the layer table alone, without allocating weights.
pub fn param_count_from_specs(cfg: &ModelConfig) -> usize {
    [embedder_specs(cfg), extractor_specs(cfg), discriminator_specs(cfg)]
        .iter()
        .flatten()
        .map(|s| s.param_count())
        .sum()
}

fn embed_flops(cfg: &ModelConfig) -> u64 {
    let mut side = cfg.block as u64;
    let mut macs = 0u64;
    for s in embedder_specs(cfg) {
        let taps = (s.cin * s.cout * 9) as u64;
        match s.kind {
            LayerKind::Conv { stride } => {
                side /= stride as u64;
                macs += side * side * taps;
            }
            LayerKind::ConvTranspose => {
                macs += side * side * taps;
                side *= 2;
            }
            LayerKind::Linear => macs += (s.cin * s.cout) as u64,
        }
    }
    2 * macs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_values() {
        assert_eq!(feature_capacity(4, 64).rho(), 0.25);
        assert_eq!(feature_capacity(3, 16).rho(), 0.25);
        assert_eq!(feature_capacity(4, 128).rho(), 0.5);
        assert_eq!(feature_capacity(5, 128).rho(), 0.125);
        assert_eq!(feature_capacity(4, 64).rho_fraction(), (1, 4));
    }

    #[test]
    fn bpp_values() {
        assert_eq!(format!("{:.4}", bits_per_pixel(128, 64)), "0.0013");
        assert_eq!(format!("{:.4}", bits_per_pixel(32, 16)), "0.0052");
        assert_eq!(bits_per_pixel_fraction(128, 64), (1, 768));
        assert_eq!(bits_per_pixel_fraction(32, 16), (1, 192));
    }
}
