//! Leader-election analytics and simulation toolkit.
//!
//! Contenders draw geometric variates, encode them base-3 into
//! 2-bit-per-digit keys, and eliminate themselves upon hearing a beep
//! while holding a 0 bit; the survivors are the stations that drew the
//! maximum. This crate provides:
//!
//! - [`analytics`]: the exact and asymptotic distribution theory of the
//!   survivor count (alternating-sum and stable-series routes, the
//!   residue-series approximation with its proven error bound, tail
//!   envelopes, round budgets);
//! - [`protocol`]: a slot-accurate simulation of one election phase with
//!   an independent argmax oracle;
//! - [`montecarlo`]: reproducible parallel estimation of every analytic
//!   quantity with confidence reporting;
//! - [`occupancy`]: the urns-and-balls singleton machinery behind the
//!   lower bound on oblivious leader election.

pub mod analytics;
pub mod error;
pub mod montecarlo;
pub mod occupancy;
pub mod protocol;
pub mod streams;

pub use error::{Error, Result};
