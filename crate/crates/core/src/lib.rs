//! Unconstrained eigenvalue solvers.
//!
//! The smallest eigenpairs of a symmetric pencil `A x = λ B x` are recovered
//! as critical points of
//!
//! ```text
//! F(x) = ½ xᵀAx + (γ/2) xᵀBx − γ √(xᵀBx)
//! ```
//!
//! whose nonzero critical points are eigenvectors with `‖x‖_B = γ/(γ+λ)`.
//! The eigenvalue can therefore be read off the norm of the converged
//! iterate. The crate provides plain and B-metric gradient descent with
//! deflation, a Newton iteration with two eigenvalue update rules, one-step
//! eigenvector estimators, and a matrix-free Dirichlet Laplacian on masked
//! 2D grids. An independent dense Jacobi oracle lives in [`oracle`].
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod functional;
pub mod gd;
pub mod grid;
pub mod krylov;
pub mod linalg;
pub mod newton;
pub mod oracle;
pub mod rng;
pub mod trace;

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use functional::{
    choose_b_metric_stepsize, choose_gamma, choose_stepsize, eigenvalue_from_norm, Functional,
    SolverConfig, SpectralPair, SpdMatrix,
};
pub use linalg::{Matrix, SymMatrix};
pub use trace::{IterationTrace, TerminalReason, TraceRecord};
