use thiserror::Error;

/// Errors raised by the model, the calibration routines and the data pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid gain {0}: gain must be finite and >= 1")]
    InvalidGain(f64),
    #[error("invalid transmission {0}: transmission must lie in [0, 1]")]
    InvalidTransmission(f64),
    #[error("invalid detection efficiency {0}: efficiency must lie in (0, 1]")]
    InvalidEfficiency(f64),
    #[error("invalid stage count {0}: at least one stage is required")]
    InvalidStages(usize),
    #[error("invalid seed photon number {0}: must be finite and > 0")]
    InvalidSeed(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode label `{0}` already present in the mode set")]
    ModeCollision(String),
    #[error("mode label `{0}` not present in the mode set")]
    UnknownMode(String),
    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),
    #[error("mode sets do not match: {0}")]
    ModeMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no interior optimum: {0}")]
    NoInteriorOptimum(String),
    #[error("observables (G_eff = {g_eff}, r = {ratio}) are not reachable by the model: {reason}")]
    InfeasibleObservables {
        g_eff: f64,
        ratio: f64,
        reason: String,
    },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unphysical measurement: {0}")]
    UnphysicalMeasurement(String),
    #[error("Fock truncation leakage {leakage:e} exceeds bound {bound:e} at n_max = {n_max}")]
    Truncation { leakage: f64, bound: f64, n_max: usize },

    #[error("power must be positive for a logarithmic conversion, got {0}")]
    NonPositivePower(f64),
    #[error("background-corrected power is not positive: {0}")]
    NegativeCorrectedPower(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("rank-deficient fit: {0}")]
    RankDeficient(String),
    #[error("frequency grids cannot be aligned: {0}")]
    GridMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidGain(gain))
    }
}

pub(crate) fn check_transmission(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidTransmission(t))
    }
}
