//! Arbitrary-precision numerical kernel: scalars, complex scalars, symmetric
//! positive definite matrices with Cholesky solves, a symmetric eigensolver,
//! and adaptive Gauss-Legendre quadrature.
//!
//! Everything downstream funnels its arithmetic through this module, so ill
//! conditioning is handled here once: computations run at a configured
//! mantissa width, and factorization failures surface as typed errors that
//! callers may answer by escalating precision.

mod complex;
mod jacobi;
mod matrix;
mod quadrature;
mod scalar;

pub use complex::ComplexScalar;
pub use jacobi::{min_singular_value, symmetric_eigenvalues};
pub use matrix::{cholesky_spd, spd_solve, CholeskyFactor, SpdMatrix};
pub use quadrature::quadrature_integrate;
pub use scalar::{PrecisionConfig, Scalar};
