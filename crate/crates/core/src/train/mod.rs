//! Adversarial training: batches, the two-phase update, the epoch loop with
//! best-model selection, and checkpoints.

pub mod checkpoint;
pub mod data;
mod run;
mod step;

pub use checkpoint::{load_checkpoint, save_checkpoint, BestRecord, Checkpoint, CheckpointError};
pub use data::{eval_batch, BatchSampler, Dataset};
pub use run::{evaluate, fit_steps, train, EpochRecord, Evaluation, TrainOutputs, TrainResult, TrainRun, CSV_HEADER};
pub use step::{train_step, StepMetrics, TrainState};
