//! Numerical laboratory for quantum ergodicity on finite (q+1)-regular graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: regular graphs, directed bonds, labellings, injectivity radii.
//! - [`tree`]: harmonic analysis on the (q+1)-regular tree (spherical functions,
//!   Green functions, Kesten–McKay density, trace formula on a finite ball).
//! - [`kernel`]: the spaces `H_k` of kernels on non-backtracking paths with the
//!   operators `M`, `M*`, `∇`, `∇*`, `L`, `S`, the shifts and the folding to the graph.
//! - [`nb`]: the non-backtracking operator and its spectral correspondence with `A`.
//! - [`variance`]: quantum variances, decay experiments, printed-constant checks.
//! - [`anis`]: anisotropic walks `A_p`, their Green system, harmonic measures and
//!   weighted transfer operators.
//! - [`eigen`], [`quad`], [`io`]: numerical and serialisation plumbing.

pub mod anis;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod nb;
pub mod quad;
pub mod scalar;
pub mod tree;
pub mod variance;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex scalar used by every kernel and eigenvector computation.
pub type C64 = num_complex::Complex<f64>;

pub use eigen::symmetric::SymmetricEigen;
pub use eigen::EigenSystem;
pub use graph::{BondTable, GeometryProfile, NamedGraph, RegularGraph};
pub use kernel::{GradedKernel, PathKernel, PathSpace};

/// Dense symmetric eigendecomposition in double precision.
pub type SymmetricEigen64 = SymmetricEigen<f64>;
/// Dense symmetric eigendecomposition in single precision.
pub type SymmetricEigen32 = SymmetricEigen<f32>;
