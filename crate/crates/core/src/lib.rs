//! Tensor-network structure search.
//!
//! Ranks, topologies and vertex permutations of a tensor network are chosen
//! by alternating local enumeration over a discrete objective
//! `1/compression_ratio + λ·RSE`, where the RSE comes from fitting the cores
//! of each candidate structure with Adam.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod landscape;
pub mod objective;
pub mod scalar;
pub mod search;
pub mod solver;
pub mod structure;
pub mod tensor;

pub use error::{Error, Result};
pub use objective::{EvaluationRecord, Evaluator, ObjectiveConfig, TensorEvaluator};
pub use scalar::Scalar;
pub use structure::{efficiency, rank_candidates, EdgeOrder, TnStructure, VertexPermutation};

/// Double-precision dense tensor, the default numeric type.
pub type DenseTensor = tensor::Tensor<f64>;
/// Single-precision dense tensor.
pub type DenseTensor32 = tensor::Tensor<f32>;
pub type Matrix = tensor::Matrix<f64>;
/// Double-precision cores of a network.
pub type CoreSet = solver::Cores<f64>;
pub type CoreSet32 = solver::Cores<f32>;
