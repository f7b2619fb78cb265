use nalgebra::{Complex, DMatrix, DVector};

use super::modes::ModeSet;
use super::transform::BogoliubovTransform;
use crate::error::{Error, Result};

/// Gaussian state in quadrature form.
///
/// Quadratures are ordered `(x_1, p_1, x_2, p_2, …)` following the mode set,
/// with `x = a + a†`, `p = −i(a − a†)`. The vacuum covariance is the identity
/// and a coherent amplitude `α` has mean `(2 Re α, 2 Im α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    modes: ModeSet,
    displacement: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(modes: ModeSet, displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * modes.len();
        if displacement.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: displacement.len(),
            });
        }
        if covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: covariance.nrows(),
            });
        }
        if (&covariance - covariance.transpose()).amax() > 1e-12 * covariance.amax().max(1.0) {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        Ok(Self {
            modes,
            displacement,
            covariance,
        })
    }

    pub fn vacuum(modes: &ModeSet) -> Self {
        let dim = 2 * modes.len();
        Self {
            modes: modes.clone(),
            displacement: DVector::zeros(dim),
            covariance: DMatrix::identity(dim, dim),
        }
    }

    /// Product of coherent states with the given amplitudes (one per mode).
    pub fn coherent(modes: &ModeSet, amplitudes: &[Complex<f64>]) -> Result<Self> {
        if amplitudes.len() != modes.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: amplitudes.len(),
            });
        }
        let mut s = Self::vacuum(modes);
        for (i, alpha) in amplitudes.iter().enumerate() {
            s.displacement[2 * i] = 2.0 * alpha.re;
            s.displacement[2 * i + 1] = 2.0 * alpha.im;
        }
        Ok(s)
    }

    /// Probe in a real coherent state with mean photon number `photons`,
    /// every other mode in vacuum.
    pub fn coherent_seed(modes: &ModeSet, photons: f64) -> Result<Self> {
        if !(photons.is_finite() && photons >= 0.0) {
            return Err(Error::InvalidSeed(photons));
        }
        let mut s = Self::vacuum(modes);
        s.displacement[0] = 2.0 * photons.sqrt();
        Ok(s)
    }

    /// Product of thermal states with the given mean occupations.
    pub fn thermal(modes: &ModeSet, occupations: &[f64]) -> Result<Self> {
        if occupations.len() != modes.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: occupations.len(),
            });
        }
        let mut s = Self::vacuum(modes);
        for (i, &n) in occupations.iter().enumerate() {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::InvalidParameter(format!("thermal occupation {n}")));
            }
            s.covariance[(2 * i, 2 * i)] = 2.0 * n + 1.0;
            s.covariance[(2 * i + 1, 2 * i + 1)] = 2.0 * n + 1.0;
        }
        Ok(s)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Appends vacuum modes so that the state lives on `modes`, which must
    /// extend the current mode set.
    pub fn extend_with_vacuum(&self, modes: &ModeSet) -> Result<Self> {
        if !self.modes.is_prefix_of(modes) {
            return Err(Error::ModeMismatch(format!(
                "{} cannot be extended to {}",
                self.modes, modes
            )));
        }
        let dim = 2 * modes.len();
        let old = self.displacement.len();
        let mut d = DVector::zeros(dim);
        d.rows_mut(0, old).copy_from(&self.displacement);
        let mut v = DMatrix::identity(dim, dim);
        v.view_mut((0, 0), (old, old)).copy_from(&self.covariance);
        Ok(Self {
            modes: modes.clone(),
            displacement: d,
            covariance: v,
        })
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let dim = self.covariance.nrows();
        let mut omega = DMatrix::<f64>::zeros(dim, dim);
        for k in 0..dim / 2 {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        // Lᵀ Ω L (V = L Lᵀ) is antisymmetric and similar to Ω V; its singular
        // values are the symplectic eigenvalues, each appearing twice.
        let l = match self.covariance.clone().cholesky() {
            Some(ch) => ch.l(),
            None => return vec![0.0; dim / 2],
        };
        let k = l.transpose() * omega * l;
        let mut ev: Vec<f64> = k.singular_values().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev.into_iter().step_by(2).collect()
    }
}

/// Propagates a state through a transform.
///
/// The state must be defined on the transform's input modes; ancillas the
/// transform allocates are added in vacuum before the symplectic map acts.
pub fn apply(t: &BogoliubovTransform, s: &GaussianState) -> Result<GaussianState> {
    if s.modes() != t.input() {
        return Err(Error::ModeMismatch(format!(
            "state on {} but transform expects {}",
            s.modes(),
            t.input()
        )));
    }
    let s = s.extend_with_vacuum(t.output())?;
    let sym = t.symplectic();
    let displacement = &sym * &s.displacement;
    let cov = &sym * &s.covariance * sym.transpose();
    let covariance = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState {
        modes: t.output().clone(),
        displacement,
        covariance,
    })
}
