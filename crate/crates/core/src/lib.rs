//! Graph scattering embeddings, a loss-perturbed convex classifier on top of
//! them, and a Newton-step unlearning engine that serves node, feature and
//! whole-graph deletion requests with computable gradient-residual bounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: graph/dataset model, dataset ingestion and structural edits.
//! * [`wavelets`]: wavelet kernels, filter banks and frame bounds.
//! * [`scattering`]: the scattering tree forward pass and the power-cache
//!   incremental path used after node removals.
//! * [`classifier`]: loss models, training, gradients, Hessians, prediction.
//! * [`unlearn`]: removal requests, residual bounds, budget ledger and the
//!   sequential unlearning engine.
//! * [`bench`]: experiment harness behind the `graph-unlearn` binary.

pub mod bench;
pub mod classifier;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod scattering;
pub mod synthetic;
pub mod unlearn;
pub mod wavelets;

pub use error::{Error, Result};
