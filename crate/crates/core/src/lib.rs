//! Multiparameter phase estimation with arrays of Mach-Zehnder interferometers.
//!
//! The crate is organised bottom-up:
//!
//! - [`fock`]: single-mode probe states on a truncated number basis and their
//!   moments.
//! - [`interferometer`]: real rotation matrices of a single MZI on each
//!   fixed-photon-number sector.
//! - [`network`]: the 2d-mode probe, exact outcome distributions and sampling.
//! - [`fisher`]: quantum Fisher information matrices, their closed-form inverse
//!   and the sensitivity bounds derived from them.
//! - [`allocate`]: optimal distribution of coherent intensity, splitting
//!   probabilities and probe photons.
//! - [`estimate`]: maximum-likelihood estimation and Monte-Carlo statistics.
//! - [`oracle`]: brute-force reference implementations used for validation.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod allocate;
pub mod error;
pub mod estimate;
pub mod fisher;
pub mod fock;
pub mod interferometer;
pub mod network;
pub mod oracle;
mod util;

pub use error::{Error, Result};
pub use fock::SingleModeState;
pub use network::{NetworkConfig, Outcome, OutcomeTable, Scheme};
