//! Numerical spectral theory for the one-dimensional Dirac operator
//!
//! ```text
//! L y = B y' + V y,   B = diag(-i, i),   V = [[0, P], [Q, 0]]
//! ```
//!
//! on `[0, pi]` with two-point boundary conditions `C y(0) + D y(pi) = 0`.
//! The crate computes fundamental matrices, characteristic determinants and
//! their zeros, Green kernels, biorthogonal systems, and decides the Riesz
//! basis criteria for regular but not strongly regular boundary conditions.
//! It also builds the lacunary counterexample potentials for which the root
//! function system fails to be a Riesz basis.

pub mod asymptotics;
pub mod counterexample;
pub mod diagnostics;
pub mod error;
pub mod green;
pub mod mat2;
pub mod model;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod spectrum;

pub use error::{Error, Result};
pub use mat2::Mat2;
pub use model::{BcClassification, BoundaryMatrix, Minors};
pub use potential::{ExpSeries, Potential};
pub use spectrum::{Spectrum, SpectrumConfig, SpectrumEntry};
pub use solver::{FundamentalMatrix, SolverConfig};


pub use num_complex::Complex64 as C64;
