//! Boundary integral solvers for interior Dirichlet problems of five 2-D
//! elliptic PDEs, with kernel-independent expansion quadrature (QBKIX) for
//! on-surface and near-boundary evaluation.

pub mod cli;
pub mod error;
pub mod expansion;
pub mod fieldeval;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
