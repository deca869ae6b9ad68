//! Galerkin-residual operator learning.
//!
//! A small finite-element kernel (meshes, P1/P2 Lagrange spaces, assembly),
//! direct and Newton oracle solvers, random parametric forcings, a
//! feed-forward network trained on the discrete Galerkin residual, a
//! boundary-layer corrector enrichment and the experiment harness that ties
//! them together.

pub mod enrichment;
pub mod error;
pub mod fem;
pub mod forcing;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod opnet;
pub mod oracle;

pub use error::{Error, Result};
