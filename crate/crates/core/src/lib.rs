//! Finite-dimensional witnesses for stable-rank constructions in nest
//! algebras and free semigroup algebras.
//!
//! * [`nest`]: truncated nests, block upper-triangular operators and the
//!   diagonal expectation.
//! * [`linalg`]: polar factors, norms, rank-revealing projections, partial
//!   isometries and resolvents.
//! * [`witness`]: right-invertible perturbations of pairs `[A B]`, with
//!   certificates that can be re-checked from the raw matrices.
//! * [`isometry`]: exact 0/1 isometry families (prime-power shifts, Fock
//!   space left shifts) and their defects.
//! * [`riesz`]: contour-integral idempotents and corner extraction.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

// Links the CBLAS symbols used by ndarray's `blas` feature.
extern crate blas_src;

pub mod blockdiag;
pub mod error;
pub mod isometry;
pub mod json;
pub mod linalg;
pub mod nest;
pub mod riesz;
pub mod sample;
pub mod witness;

pub use error::{Error, Result};
pub use linalg::{C64, CMat};
pub use nest::{NestOperator, NestSpec};
