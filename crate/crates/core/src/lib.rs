//! Multiscale graph framelet transforms and framelet message passing.
//!
//! The crate provides, in rough dependency order:
//!
//! - [`graph`]: sparse undirected graphs, the self-loop-augmented normalized
//!   Laplacian, Dirichlet energy, homophily, and a two-class stochastic block
//!   model generator;
//! - [`spectral`]: a cyclic Jacobi eigensolver and the Haar / two-high-pass
//!   filter banks;
//! - [`chebyshev`]: polynomial filter fits and matrix-free application;
//! - [`operators`]: the framelet operator family, exact or Chebyshev
//!   approximated, with tightness diagnostics;
//! - [`fmp`]: the framelet message passing layer, its ODE vector field, a
//!   reference GCN layer, and energy / stability probes;
//! - [`ode`]: Dormand-Prince 5(4) and fixed-step RK4 integrators;
//! - [`train`]: hand-derived reverse-mode gradients, Adam/Adamax, and a
//!   node-classification training loop.
//!
//! All numerics are generic over the [`scalar::Float`] scalar; the `*64`
//! aliases below pin the common `f64` instantiations.
//!
//! ## Example
//!
//! Build the exactly tight operator family on a small synthetic graph and
//! check its reconstruction residual:
//!
//! ```
//! use fmp_core::graph::{build_laplacian_bundle, generate_sbm, SbmConfig};
//! use fmp_core::operators::{build_exact_operators, tightness_report};
//! use fmp_core::spectral::{eig_symmetric, nu_bank};
//!
//! let graph = generate_sbm::<f64>(7, &SbmConfig { n: 10, ..SbmConfig::default() }).unwrap();
//! let mut bundle = build_laplacian_bundle(&graph).unwrap();
//! let dec = eig_symmetric(&bundle.norm_laplacian().to_dense()).unwrap();
//! bundle.set_lambda_max(dec.lambda_max());
//! let ops = build_exact_operators(&dec, nu_bank(), 2).unwrap();
//! let report = tightness_report(&ops).unwrap();
//! assert!(report.reconstruction_error <= 1e-9);
//! ```

pub mod chebyshev;
pub mod error;
pub mod fmp;
pub mod graph;
pub mod linalg;
pub mod ode;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Float;

/// `f64` instantiations of the core types.
pub type Graph64 = graph::Graph<f64>;
pub type LaplacianBundle64 = graph::LaplacianBundle<f64>;
pub type SpectralDecomposition64 = spectral::SpectralDecomposition<f64>;
pub type FilterBank64 = spectral::FilterBank<f64>;
pub type FrameletOperatorSet64 = operators::FrameletOperatorSet<f64>;
pub type TightnessReport64 = operators::TightnessReport<f64>;
pub type FmpParams64 = fmp::FmpParams<f64>;
pub type DenseMatrix64 = linalg::DenseMatrix<f64>;
pub type CsrMatrix64 = linalg::CsrMatrix<f64>;
