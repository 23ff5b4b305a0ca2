//! Noisy-label robust training with two jointly trained networks.
//!
//! Two same-architecture classifiers are trained on a joint loss mixing
//! their cross-entropy with a symmetric-KL agreement term, backpropagating
//! only the small-loss part of every mini-batch. Every few epochs the
//! networks are frozen and labels they confidently agree on, but which
//! disagree with the current label, are rewritten. After the label updates a
//! fine-tuning stage runs with labels fixed.
//!
//! Modules, bottom-up:
//! - [`backbone`]: MLP forward/backward and Adam
//! - [`losses`]: cross-entropy, agreement and joint losses with gradients
//! - [`noise`]: label transition matrices and corruption
//! - [`selection`]: small-loss and correction-set selection, schedules
//! - [`datasets`]: blobs generator, CSV I/O, train/test split
//! - [`trainer`]: the two-stage pipeline, baselines and ablations
//! - [`metrics`]: per-epoch records and the JSON-lines log
//! - [`config`] and [`harness`]: key=value configs and the command runner

pub mod backbone;
pub mod config;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod selection;
pub mod trainer;

pub use error::{Error, Result};
