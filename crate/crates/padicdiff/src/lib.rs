//! Exact and capped-precision p-adic algebra for skew-Laurent differential
//! operators, twisting automorphisms, Dwork projectors and the carry
//! combinatorics of binomial valuations.
//!
//! Everything here is `no_std` with `alloc`; IO and the command line live in
//! the `padicdiff-cli` crate.
#![no_std]

extern crate alloc;

pub mod affinoid_norms;
pub mod carrylab;
pub mod dworklab;
mod error;
pub mod padic_core;
pub mod ratfun;
pub mod skewalg;
pub mod twistlab;
pub mod zetalab;

pub use error::{Error, Result};

/// Exact rational numbers used as coefficients throughout.
pub type Q = num_rational::BigRational;
