//! Minimal dense and sparse linear algebra used by the rest of the crate.

mod dense;
mod sparse;

pub use dense::DenseMatrix;
pub use sparse::CsrMatrix;
