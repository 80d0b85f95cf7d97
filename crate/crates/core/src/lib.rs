//! Exact-arithmetic engine for finite-type graded chain Hopf algebras over
//! 𝔽_p and ℤ_(p): degreewise homology with torsion, primitives and
//! indecomposables, Bockstein-style page analysis with explicit integral
//! witnesses, a word-length-≤2 cobar-type obstruction oracle, and a
//! constructive primitivization pipeline that emits machine-checkable
//! certificates.
//!
//! All values are immutable after construction and every operation is a pure
//! function of its inputs; caches are single-writer/many-reader, so slices
//! for distinct degrees may be computed concurrently.

pub mod algebra;
pub mod bockstein;
pub mod cli;
pub mod cobar;
pub mod corpus;
pub mod error;
pub mod graded;
pub mod hopf;
pub mod io;
pub mod matrix;
pub mod primitivization;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Ring, Scalar};
