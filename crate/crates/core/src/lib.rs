//! Distributed representations of scalar values in volumetric data.
//!
//! The pipeline: discretize a volume into symbols (scalar values or
//! scalar-value combinations), train a skip-gram model with adaptive and
//! self-paced negative sampling over 3D voxel contexts, then use the learned
//! vectors for similarity maps, feature classification via clustering, and
//! volume-to-volume association via transfer prediction.

pub mod abc;
pub mod config;
pub mod dataset;
pub mod dbscan;
pub mod error;
pub mod fmt;
pub mod model;
pub mod model_io;
pub mod multivar;
pub mod negative;
pub mod render;
pub mod sampler;
pub mod similarity;
pub mod symbol;
pub mod transfer;
pub mod tsne;
pub mod volume;

pub use config::TrainConfig;
pub use error::Error;
pub use model::EmbeddingModel;
pub use symbol::{SymbolTable, SymbolVolume};
pub use volume::{Dims, QuantizedVolume, Volume};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
