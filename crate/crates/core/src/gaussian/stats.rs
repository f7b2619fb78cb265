use nalgebra::Complex;
use serde::Serialize;

use super::state::GaussianState;
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Photon-number moments of a pair of modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhotonStats {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
    /// `Var(N_a − N_b)`.
    pub var_diff: f64,
}

impl PhotonStats {
    pub fn from_moments(mean_a: f64, mean_b: f64, var_a: f64, var_b: f64, cov_ab: f64) -> Self {
        Self {
            mean_a,
            mean_b,
            var_a,
            var_b,
            cov_ab,
            var_diff: var_a + var_b - 2.0 * cov_ab,
        }
    }

    /// Intensity-difference noise relative to the shot noise of the total
    /// photon number.
    pub fn noise_ratio(&self) -> f64 {
        self.var_diff / (self.mean_a + self.mean_b)
    }
}

/// Centered second moments `n_ij = ⟨δa_i† δa_j⟩` and `m_ij = ⟨δa_i δa_j⟩`
/// read off the symmetrized quadrature covariance.
fn normal_moments(s: &GaussianState, i: usize, j: usize) -> (C64, C64) {
    let v = s.covariance();
    let (xi, pi, xj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
    let delta = if i == j { 0.5 } else { 0.0 };
    let n = C64::new(
        (v[(xi, xj)] + v[(pi, pj)]) / 4.0 - delta,
        (v[(xi, pj)] - v[(pi, xj)]) / 4.0,
    );
    let m = C64::new(
        (v[(xi, xj)] - v[(pi, pj)]) / 4.0,
        (v[(xi, pj)] + v[(pi, xj)]) / 4.0,
    );
    (n, m)
}

fn amplitude(s: &GaussianState, i: usize) -> C64 {
    let d = s.displacement();
    C64::new(d[2 * i], d[2 * i + 1]) / 2.0
}

/// Covariance `Cov(N_i, N_j)` of a Gaussian state via the moment theorem.
fn number_covariance(s: &GaussianState, i: usize, j: usize) -> f64 {
    let (n, m) = normal_moments(s, i, j);
    let (ai, aj) = (amplitude(s, i), amplitude(s, j));
    let linear = 2.0 * (ai.conj() * aj.conj() * m).re + 2.0 * (ai * aj.conj() * n).re;
    if i == j {
        linear + ai.norm_sqr() + m.norm_sqr() + n.re * (n.re + 1.0)
    } else {
        linear + m.norm_sqr() + n.norm_sqr()
    }
}

fn mean_number(s: &GaussianState, i: usize) -> f64 {
    amplitude(s, i).norm_sqr() + normal_moments(s, i, i).0.re
}

/// Exact photon-number statistics of the modes `pair`; all other modes are
/// ignored.
pub fn photon_statistics(s: &GaussianState, pair: (&str, &str)) -> Result<PhotonStats> {
    let i = s.modes().index_of(pair.0)?;
    let j = s.modes().index_of(pair.1)?;
    if i == j {
        return Err(Error::ModeCollision(pair.0.to_string()));
    }
    Ok(PhotonStats::from_moments(
        mean_number(s, i).max(0.0),
        mean_number(s, j).max(0.0),
        number_covariance(s, i, i),
        number_covariance(s, j, j),
        number_covariance(s, i, j),
    ))
}

/// Statistics of the probe/conjugate pair (indices 0 and 1).
pub fn twin_statistics(s: &GaussianState) -> PhotonStats {
    let labels = s.modes().labels();
    photon_statistics(s, (&labels[0], &labels[1])).expect("probe and conjugate are always present")
}
