//! Positional encodings built from the Weierstrass elliptic function.
//!
//! The crate is organised bottom-up:
//!
//! * [`elliptic`] evaluates ℘(z) and ℘′(z) by truncated, modulus-sorted lattice
//!   summation with per-term and final clamping, and [`identities`] checks the
//!   classical identities (differential equation, addition formula, periodicity,
//!   parity, Laurent coefficient) against that evaluator.
//! * [`fast`] is the Fourier-like closed form used when fine-tuning, with
//!   analytic gradients and a tail bound.
//! * [`encoding`] turns an `H × W` patch grid into an `(H·W + 1) × d` encoding
//!   matrix, and [`analysis`] measures distance decay, similarity structure and
//!   principal components of such matrices.
//! * [`convergence`] compares partial sums of both orderings to a deep
//!   truncation.
//! * [`gridfile`] and [`config`] hold the on-disk formats used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod convergence;
pub mod elliptic;
pub mod encoding;
mod error;
pub mod fast;
pub mod gridfile;
pub mod identities;
pub mod linalg;
pub mod util;

pub use error::{Error, Result};
pub use num_complex::Complex64;
