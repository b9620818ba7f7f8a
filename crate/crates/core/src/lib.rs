//! Variable-exponent Lebesgue and fractional Sobolev machinery on boxes in one or
//! two dimensions: Luxemburg norms, Gagliardo modulars with singular-kernel pair
//! quadrature, the weak form of the fractional p(x)-Laplacian, energy descent and
//! De Giorgi level-set traces.

pub mod degiorgi;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod modular;
pub mod nonlocal;
pub mod random;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
