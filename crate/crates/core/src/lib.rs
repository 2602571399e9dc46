//! Grid-world exploration with an online spatial topic model.
//!
//! A simulated agent walks a 2D grid of cells, each holding a bag of discrete
//! tokens, and incrementally fits a topic model whose Gibbs sampler couples a
//! cell's assignments to its spatial neighborhood. Path planning policies score
//! candidate moves by model surprise, which turns the fitted model into a
//! curiosity signal. The crate also ships a synthetic world generator and an
//! evaluation harness that scores recovered label maps against ground truth
//! with mutual information.

pub mod eval;
pub mod exec;
pub mod explore;
pub mod files;
pub mod grid;
pub mod model;
pub mod seeds;
pub mod worldgen;

pub use eval::LabelMap;
pub use explore::{ExploreConfig, Path, Policy};
pub use grid::{CellCoord, GridWorld};
pub use model::{Hyperparams, ModelSnapshot, TopicModel};
pub use worldgen::GenConfig;

/// Errors for fallible operations: bad configs, malformed files, artifacts
/// that do not fit together. Contract violations (out-of-bounds coordinates,
/// stale token handles) panic instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
