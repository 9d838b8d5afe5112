//! Causal-order discovery over the latent dimensions of a knowledge graph:
//! ingest triples into a sparse binary adjacency tensor, factorize it with a
//! multilinear embedding model, project the factorization into a
//! relations-by-features matrix, and run linear non-Gaussian causal
//! discovery on the result.

pub mod error;
pub mod kg;
pub mod linalg;
pub mod lingam;
pub mod projection;
pub mod rng;
pub mod stats;
pub mod tensor;
pub mod tucker;

pub use error::{Error, Result};
