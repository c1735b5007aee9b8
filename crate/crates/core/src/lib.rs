//! Verification laboratory for the envariance account of quantum probabilities.
//!
//! The crate builds every constructive step mechanically: Schmidt
//! decompositions and counter-transformations ([`envariance`]), fine-graining
//! to equal-amplitude cells and counting them ([`born`]), pointer states from
//! correlation stability ([`pointer`]), the Boolean algebra of record events
//! ([`records`]), exact history counting in measurement superensembles
//! ([`frequencies`]) and discretization of continuous wave functions
//! ([`continuum`]).

// negated float comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod born;
pub mod continuum;
pub mod envariance;
pub mod error;
pub mod frequencies;
pub mod hilbert;
pub mod linalg;
pub mod pointer;
pub mod records;
pub mod sample;

pub use error::{Error, Result};
pub use hilbert::{Bipartition, LocalUnitary, SchmidtDecomposition, StateVector};

pub use nalgebra::{DMatrix, DVector};
pub use num_bigint::BigUint;
pub use num_complex::Complex64 as C64;
pub use num_rational::BigRational;
