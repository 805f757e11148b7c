//! Exact non-Archimedean probability over a desk-scale set-theoretic universe.

pub mod bootstrap;
pub mod error;
pub mod filter;
pub mod germ;
pub mod rational;
pub mod snapshot;
pub mod text;
pub mod universe;
pub mod verdict;

pub use error::{NapError, Result};

/// Exact rational numbers with arbitrary-precision parts.
pub type Rational = num_rational::BigRational;
