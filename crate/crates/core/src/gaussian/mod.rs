//! Gaussian-state engine: Bogoliubov transforms for two-mode gain and
//! single-mode loss, their composition, state propagation and exact
//! photon-number statistics.

pub mod modes;
pub mod state;
pub mod stats;
pub mod transform;

pub use modes::{ModeSet, CONJUGATE, PROBE};
pub use state::{apply, GaussianState};
pub use stats::{photon_statistics, twin_statistics, PhotonStats};
pub use transform::{attenuator, compose, phase_shift, two_mode_squeezer, BogoliubovTransform};
