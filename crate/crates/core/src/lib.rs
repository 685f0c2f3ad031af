//! High-precision laboratory for Muntz exponential systems on a finite
//! interval.
//!
//! The library studies finite sections of the family e^(lambda_n t) for a
//! sparse positive exponent sequence: the Gram geometry of their closed span,
//! the biorthogonal family living inside that span, Fourier-type expansions
//! with their rigid non-convergence, completeness of mixed
//! exponential/biorthogonal systems under every index split, and a compact
//! non-normal operator diagonal in this pair of systems whose invariant
//! subspaces admit spectral synthesis.
//!
//! All arithmetic is multiple-precision with explicit mantissa widths;
//! thresholds are stated as powers of two tied to the working width so that
//! verdicts (complete / defective / undecidable) are reproducible.

pub mod biorth;
pub mod error;
pub mod expand;
pub mod hereditary;
pub mod numerics;
pub mod operators;
pub mod spaces;

pub use error::{Error, Result};
