//! Inversion of measured `(G_eff, r)` to intrinsic `(G, T)`, and removal of
//! detection loss from a measured squeezing ratio.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{forward_map, DetectionParams, MediumParams};

/// Success threshold on the reported residual.
pub const RESIDUAL_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 100;
const DAMPING: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMethod {
    /// `r = 0` forces unit gain; solved in closed form.
    Direct,
    Newton,
    NestedBisection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InversionResult {
    pub gain: f64,
    pub transmission: f64,
    /// Largest relative mismatch between model and target `(G_eff, r)`.
    pub residual: f64,
    pub iterations: usize,
    pub method: InversionMethod,
}

struct Target {
    g_eff: f64,
    ratio: f64,
    stages: usize,
    seed: f64,
}

impl Target {
    fn model(&self, gain: f64, transmission: f64) -> Result<(f64, f64)> {
        forward_map(&MediumParams::new(gain, transmission, self.stages)?, self.seed)
    }

    /// Relative mismatch `(G_eff,model/G_eff − 1, r_model/r − 1)`.
    fn mismatch(&self, gain: f64, transmission: f64) -> Result<Vector2<f64>> {
        let (ge, r) = self.model(gain, transmission)?;
        Ok(Vector2::new(ge / self.g_eff - 1.0, r / self.ratio - 1.0))
    }

    fn residual(&self, gain: f64, transmission: f64) -> Result<f64> {
        Ok(self.mismatch(gain, transmission)?.amax())
    }

    /// Unit-gain-free solve of `G_eff(G, T) = target` at fixed `T`.
    fn gain_for(&self, transmission: f64) -> Result<Option<f64>> {
        let ge = |g: f64| self.model(g, transmission).map(|m| m.0);
        if ge(1.0)? > self.g_eff {
            return Ok(None);
        }
        let mut hi = 2.0;
        while ge(hi)? < self.g_eff {
            hi *= 2.0;
            if hi > 1e9 {
                return Ok(None);
            }
        }
        let mut lo = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ge(mid)? < self.g_eff {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

/// Recovers the intrinsic gain and probe transmission that reproduce the
/// measured effective gain `g_eff` and conjugate/probe ratio `ratio`.
///
/// Damped Newton with a finite-difference Jacobian runs first; nested
/// bisection (gain for `G_eff` inside, transmission for `r` outside) takes
/// over if Newton fails, and its result is polished by Newton again.
pub fn invert_observables(g_eff: f64, ratio: f64, stages: usize, seed_photons: f64) -> Result<InversionResult> {
    if !(g_eff.is_finite() && g_eff > 0.0) {
        return Err(Error::InvalidParameter(format!("G_eff must be positive, got {g_eff}")));
    }
    if !(ratio.is_finite() && ratio >= 0.0) {
        return Err(Error::InvalidParameter(format!("r must be nonnegative, got {ratio}")));
    }
    MediumParams::new(1.0, 1.0, stages)?;
    if !(seed_photons.is_finite() && seed_photons > 0.0) {
        return Err(Error::InvalidSeed(seed_photons));
    }
    let infeasible = |reason: &str| Error::InfeasibleObservables {
        g_eff,
        ratio,
        reason: reason.to_string(),
    };

    if ratio == 0.0 {
        // no conjugate means no gain; the probe then only sees loss
        return if g_eff <= 1.0 {
            Ok(InversionResult {
                gain: 1.0,
                transmission: g_eff,
                residual: 0.0,
                iterations: 0,
                method: InversionMethod::Direct,
            })
        } else {
            Err(infeasible("gain above 1 without any conjugate"))
        };
    }
    let target = Target {
        g_eff,
        ratio,
        stages,
        seed: seed_photons,
    };

    // Lossless bound: at T = 1 the conjugate is as weak as it can be for this G_eff.
    if g_eff >= 1.0 {
        if let Some(g1) = target.gain_for(1.0)? {
            let (_, r_min) = target.model(g1, 1.0)?;
            if ratio < r_min * (1.0 - RESIDUAL_TOL) {
                return Err(infeasible(&format!(
                    "conjugate ratio below the lossless bound {r_min}"
                )));
            }
        }
    }

    let (g0, t0) = initial_guess(g_eff, ratio);
    if let Ok(found) = newton(&target, g0, t0) {
        return Ok(found);
    }
    let (g1, t1, outer) = nested_bisection(&target).ok_or_else(|| infeasible("no transmission in (0, 1] matches r"))?;
    match newton(&target, g1, t1) {
        Ok(mut polished) => {
            polished.iterations += outer;
            polished.method = InversionMethod::NestedBisection;
            Ok(polished)
        }
        Err(_) => {
            let residual = target.residual(g1, t1)?;
            if residual < RESIDUAL_TOL {
                Ok(InversionResult {
                    gain: g1,
                    transmission: t1,
                    residual,
                    iterations: outer,
                    method: InversionMethod::NestedBisection,
                })
            } else {
                Err(Error::NoConvergence {
                    iterations: outer,
                    residual,
                })
            }
        }
    }
}

/// Bright lossless relation `r ≈ (G − 1)/G` gives `G`; `T` absorbs the rest of `G_eff`.
fn initial_guess(g_eff: f64, ratio: f64) -> (f64, f64) {
    if ratio < 1.0 {
        let g = 1.0 / (1.0 - ratio);
        let t = g_eff / g;
        if t > 0.0 && t <= 1.0 {
            return (g, t);
        }
    }
    (g_eff.max(1.0), 0.9)
}

fn project(gain: f64, transmission: f64) -> (f64, f64) {
    (gain.max(1.0), transmission.clamp(1e-9, 1.0))
}

fn jacobian(target: &Target, gain: f64, transmission: f64) -> Result<Matrix2<f64>> {
    let hg = 1e-6 * gain;
    let dg = (target.mismatch(gain + hg, transmission)? - target.mismatch((gain - hg).max(1.0), transmission)?)
        / (gain + hg - (gain - hg).max(1.0));
    let ht = 1e-6 * transmission;
    let (t_hi, t_lo) = ((transmission + ht).min(1.0), transmission - ht);
    let dt = (target.mismatch(gain, t_hi)? - target.mismatch(gain, t_lo)?) / (t_hi - t_lo);
    Ok(Matrix2::from_columns(&[dg, dt]))
}

fn newton(target: &Target, gain: f64, transmission: f64) -> Result<InversionResult> {
    let (mut g, mut t) = project(gain, transmission);
    let mut f = target.mismatch(g, t)?;
    for iteration in 1..=MAX_ITERATIONS {
        if f.amax() < NEWTON_TOL {
            return Ok(InversionResult {
                gain: g,
                transmission: t,
                residual: f.amax(),
                iterations: iteration - 1,
                method: InversionMethod::Newton,
            });
        }
        let j = jacobian(target, g, t)?;
        let mut step = j.lu().solve(&(-f)).ok_or(Error::NoConvergence {
            iterations: iteration,
            residual: f.amax(),
        })?;
        // On the T = 1 face, drop the transmission direction and match G_eff alone.
        let pinned = t >= 1.0 && step[1] > 0.0;
        if pinned {
            step = Vector2::new(-f[0] / j[(0, 0)], 0.0);
        }
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let (gn, tn) = project(g + scale * step[0], t + scale * step[1]);
            let fnew = target.mismatch(gn, tn)?;
            if fnew.norm() < f.norm() {
                accepted = Some((gn, tn, fnew));
                break;
            }
            scale *= DAMPING;
        }
        match accepted {
            Some((gn, tn, fnew)) => {
                let moved = ((gn - g) / g).abs().max((tn - t).abs());
                g = gn;
                t = tn;
                f = fnew;
                if pinned && f[0].abs() < NEWTON_TOL && f.amax() < RESIDUAL_TOL || moved < 1e-15 && f.amax() < RESIDUAL_TOL {
                    return Ok(InversionResult {
                        gain: g,
                        transmission: t,
                        residual: f.amax(),
                        iterations: iteration,
                        method: InversionMethod::Newton,
                    });
                }
            }
            None if f.amax() < RESIDUAL_TOL => {
                return Ok(InversionResult {
                    gain: g,
                    transmission: t,
                    residual: f.amax(),
                    iterations: iteration,
                    method: InversionMethod::Newton,
                })
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual: f.amax(),
                })
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: f.amax(),
    })
}

/// Outer bisection on `T` of `r(G(T), T) − r`, where `G(T)` matches `G_eff`.
/// `r` grows as `T` falls, so the root is bracketed between the largest
/// admissible `T` and a `T` small enough to overshoot.
fn nested_bisection(target: &Target) -> Option<(f64, f64, usize)> {
    let excess = |t: f64| -> Option<(f64, f64)> {
        let g = target.gain_for(t).ok()??;
        let (_, r) = target.model(g, t).ok()?;
        Some((r - target.ratio, g))
    };
    let mut hi = target.g_eff.min(1.0);
    if excess(hi)?.0 > 0.0 {
        return None;
    }
    let mut lo = 0.5 * hi;
    let mut iterations = 0;
    loop {
        iterations += 1;
        match excess(lo) {
            Some((e, _)) if e > 0.0 => break,
            Some(_) if lo > 1e-6 => {
                hi = lo;
                lo *= 0.5;
            }
            _ => return None,
        }
    }
    for _ in 0..200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if excess(mid)?.0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let (_, g) = excess(t)?;
    Some((g, t, iterations))
}

/// Measured squeezing and the squeezing at the source after undoing a
/// balanced detection loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectionCorrection {
    pub efficiency: f64,
    pub measured: f64,
    pub measured_db: f64,
    pub source: f64,
    pub source_db: f64,
}

/// Inverts `S_meas = η·S_source + (1 − η)`.
pub fn correct_for_detection(measured: f64, efficiency: f64) -> Result<DetectionCorrection> {
    DetectionParams::new(efficiency)?;
    if !measured.is_finite() || measured <= 1.0 - efficiency {
        return Err(Error::UnphysicalMeasurement(format!(
            "S_meas = {measured} must exceed 1 − η = {}",
            1.0 - efficiency
        )));
    }
    let source = (measured - (1.0 - efficiency)) / efficiency;
    Ok(DetectionCorrection {
        efficiency,
        measured,
        measured_db: 10.0 * measured.log10(),
        source,
        source_db: 10.0 * source.log10(),
    })
}
