//! Token spacing and residual alignment for text-embedding matrices.
//!
//! The crate covers the full workflow around the intervention:
//!
//! - [`io`]: npy array files and deterministic metric reports
//! - [`linalg`]: SVD with a fixed sign convention, elbow detection, plane rotations
//! - [`transform`]: variance scale-up, token spacing, residual alignment
//! - [`metrics`]: eigenvalue sum, local isotropy, IsoScore, global anisotropy,
//!   cosine-alignment change and principal-component removal
//! - [`gmm`]: diagonal Gaussian mixtures fitted by EM, for local clusters
//! - [`sim`]: a small joint-attention simulator with an intervention hook

pub mod embedding;
pub mod error;
pub mod gmm;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod sim;
pub mod transform;

pub use embedding::EmbeddingMatrix;
pub use error::{Result, ToraError};
