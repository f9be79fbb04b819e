//! Network construction, the training objective and capacity analysis.

pub mod capacity;
mod config;
pub mod loss;
pub mod networks;
mod params;

pub use capacity::{bits_per_pixel, feature_capacity, model_complexity, Complexity, FeatureCapacity};
pub use config::{ModelConfig, DEFAULT_SEED};
pub use loss::{discriminator_loss, total_loss, LossVars, LOG_EPS};
pub use networks::{decode_bits, Discriminator, Embedder, Extractor, StegoModels};
pub use params::ParamStore;
