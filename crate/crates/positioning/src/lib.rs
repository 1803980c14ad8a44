//! CSI-based positioning: feature preprocessing, a fully connected ReLU
//! network trained with Adam on mean squared error, error metrics, the
//! geometric-median baseline and a synthetic line-of-sight dataset.

pub mod baseline;
pub mod checkpoint;
mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod gradcheck;
pub mod mlp;
pub mod train;

pub use error::{Error, Result};
pub use mlp::{Mlp, DEFAULT_DIMS};
pub use train::{train, TrainConfig};
