//! Twin-beam amplifier toolkit.
//!
//! The medium is modelled as a stack of interleaved two-mode gain stages and
//! probe-only loss stages. States are Gaussian, so every observable is
//! computed exactly from first and second moments; a truncated Fock-space
//! simulator ([`fock`]) provides brute-force ground truth at small scale.
//!
//! - [`gaussian`]: Bogoliubov transforms, Gaussian states, photon statistics.
//! - [`medium`]: stage cascade, detection, squeezing surface and optima.
//! - [`calibration`]: observables → intrinsic parameters, detection correction.
//! - [`fock`]: truncated Fock-space oracle and the cross-engine validation suite.
//! - [`optimize`]: grid bracketing and golden-section search.
//! - [`analysis`]: noise-versus-power fits and spectrum reduction.
//! - [`cli`]: the `twinbeam` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod medium;
pub mod optimize;

pub use error::{Error, Result};
