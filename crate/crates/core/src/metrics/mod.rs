//! Distortion and bit-accuracy metrics, the benchmark runner and the
//! capacity sweep.

pub mod bench;
pub mod quality;
pub mod sweep;

pub use bench::{bench, BenchOptions, BenchReport, BenchRow, IdentityStub, StegoModel};
pub use quality::{ber, diff_image, mae, mse, psnr, psnr_float, ssim};
pub use sweep::{parse_seeds, parse_spec, sweep, SpecError, SweepReport, SweepRow, SweepSpec, SweepTuple};
