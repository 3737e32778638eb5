//! Finite, exact computations around transfinite Schreier families and
//! asymptotic-l1 sequences of non-negative functions.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and anything touching the operating system live in the `asyml1` crate.
//!
//! Module map:
//!
//! * [`ordinal`]: Cantor normal form below epsilon_0 with canonical
//!   fundamental sequences.
//! * [`finset`] and [`schreier`]: finite sets of positive integers and the
//!   families `S_alpha`.
//! * [`normmodel`]: Schreier-space and Tsirelson-type norms with their norming
//!   points, plus asymptotic-l1 checks.
//! * [`blockcert`]: `(alpha, eps)` blocks, chains and their exhaustive
//!   verifiers and searches.
//! * [`goodness`]: measure-family combinatorics and the measure-separation
//!   transcript.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod blockcert;
pub mod budget;
pub mod error;
pub mod finset;
pub mod goodness;
pub mod normmodel;
pub mod ordinal;
pub mod rational;
pub mod schreier;

pub use error::{Error, ParseError, Result};
pub use finset::FinSet;
pub use ordinal::Ordinal;
pub use rational::Q;

/// Version string embedded in emitted certificates.
pub const VERIFIER_VERSION: &str = concat!("asyml1-core/", env!("CARGO_PKG_VERSION"));
