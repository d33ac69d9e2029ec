//! Deterministic simulator and security harness for a distributed quantum
//! election scheme.
//!
//! Layers, bottom up:
//!
//! - [`qubit`] and [`density`]: real-amplitude single-qubit simulation and
//!   small density-matrix utilities.
//! - [`primitives`]: XOR combiner, one-time pad, parity blocks, repetition
//!   code, key splitting.
//! - [`aqkd_basic`] and [`aqkd_string`]: the two anonymous key
//!   distribution protocols.
//! - [`election`]: the four-phase election and the classical two-authority
//!   baseline.
//! - [`adversary`]: attacks and exact ensemble audits.
//! - [`harness`]: configuration, presets and output files for the
//!   `qelection` binary.
//!
//! All randomness flows through an explicitly passed [`rng::SimRng`];
//! identical seeds give identical transcripts.

pub mod adversary;
pub mod anonymity;
pub mod aqkd_basic;
pub mod aqkd_string;
pub mod bits;
pub mod density;
pub mod election;
pub mod error;
pub mod harness;
pub mod primitives;
pub mod qubit;
pub mod rng;
pub mod stats;
pub mod transcript;

pub use bits::{bits, BitString};
pub use error::{Error, Result};
