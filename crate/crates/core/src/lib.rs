//! Negative sampling for wide softmax layers with locality-sensitive hash
//! tables over the output class vectors.
//!
//! The numeric core is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the usual choice.

pub mod config;
pub mod data;
pub mod eval;
pub mod hash;
pub mod network;
pub mod sampler;
pub mod scalar;
pub mod seed;
pub mod tables;
pub mod vector;

pub use config::RunConfig;
pub use scalar::Scalar;

/// Any failure a run can hit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Hash(#[from] hash::HashError),
    #[error(transparent)]
    Table(#[from] tables::TableError),
    #[error(transparent)]
    Sampler(#[from] sampler::SamplerError),
    #[error(transparent)]
    Network(#[from] network::NetworkError),
    #[error(transparent)]
    Checkpoint(#[from] network::CheckpointError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

pub type Trainer32 = network::Trainer<f32>;
pub type Trainer64 = network::Trainer<f64>;
pub type Params32 = network::NetworkParams<f32>;
pub type Tables32 = tables::LshTables<f32>;
pub type Dataset32 = data::XcDataset<f32>;
pub type Dataset64 = data::XcDataset<f64>;
