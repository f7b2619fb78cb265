use serde::Serialize;

use super::{simulate_twin_beams, DetectionParams, MediumParams, DEFAULT_STAGES};
use crate::error::{Error, Result};
use crate::optimize::{golden_section, grid_bracket, Bracket};

/// Search window for [`find_optimum_gain`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainSearch {
    pub max_gain: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    pub stages: usize,
}

impl Default for GainSearch {
    fn default() -> Self {
        Self {
            max_gain: 50.0,
            grid_points: 197,
            tolerance: 1e-4,
            stages: DEFAULT_STAGES,
        }
    }
}

/// Search window for [`find_optimum_transmission`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionSearch {
    pub min_transmission: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    pub stages: usize,
}

impl Default for TransmissionSearch {
    fn default() -> Self {
        Self {
            min_transmission: 0.01,
            grid_points: 199,
            tolerance: 1e-4,
            stages: DEFAULT_STAGES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainOptimum {
    pub gain: f64,
    pub squeezing_db: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransmissionOptimum {
    pub transmission: f64,
    pub squeezing_db: f64,
    /// False when the minimum sits on either end of the search window.
    pub interior: bool,
}

fn squeezing_db(gain: f64, transmission: f64, stages: usize, d: &DetectionParams, seed: f64) -> f64 {
    MediumParams::new(gain, transmission, stages)
        .and_then(|p| simulate_twin_beams(&p, d, seed))
        .map(|o| o.squeezing_db)
        .unwrap_or(f64::INFINITY)
}

/// Gain minimising the detected squeezing at fixed probe transmission.
///
/// Without loss the squeezing improves monotonically with gain, so `T = 1`
/// (and any minimum found on the window edge) is reported as
/// [`Error::NoInteriorOptimum`].
pub fn find_optimum_gain(
    transmission: f64,
    d: &DetectionParams,
    seed_photons: f64,
    search: &GainSearch,
) -> Result<GainOptimum> {
    if !(transmission > 0.0 && transmission <= 1.0) {
        return Err(Error::InvalidTransmission(transmission));
    }
    if transmission >= 1.0 {
        return Err(Error::NoInteriorOptimum(
            "squeezing decreases monotonically with gain at T = 1".into(),
        ));
    }
    if !(search.max_gain > 1.0) {
        return Err(Error::InvalidGain(search.max_gain));
    }
    // surface evaluation validates the seed
    simulate_twin_beams(&MediumParams::new(1.0, transmission, search.stages)?, d, seed_photons)?;
    let f = |g: f64| squeezing_db(g, transmission, search.stages, d, seed_photons);
    match grid_bracket(f, 1.0, search.max_gain, search.grid_points).0 {
        Bracket::Interior { lo, hi } => {
            let (gain, squeezing_db) = golden_section(f, lo, hi, search.tolerance);
            Ok(GainOptimum { gain, squeezing_db })
        }
        Bracket::Lower => Err(Error::NoInteriorOptimum(format!(
            "minimum at G = 1 for T = {transmission}"
        ))),
        Bracket::Upper => Err(Error::NoInteriorOptimum(format!(
            "minimum at the upper gain bound {} for T = {transmission}",
            search.max_gain
        ))),
    }
}

/// Transmission minimising the detected squeezing at fixed gain, searched
/// over `[min_transmission, 1]`.
pub fn find_optimum_transmission(
    gain: f64,
    d: &DetectionParams,
    seed_photons: f64,
    search: &TransmissionSearch,
) -> Result<TransmissionOptimum> {
    if !(gain.is_finite() && gain >= 1.0) {
        return Err(Error::InvalidGain(gain));
    }
    if gain == 1.0 {
        return Err(Error::NoInteriorOptimum(
            "unit gain: squeezing does not depend on transmission".into(),
        ));
    }
    let t_min = search.min_transmission;
    if !(t_min > 0.0 && t_min < 1.0) {
        return Err(Error::InvalidTransmission(t_min));
    }
    simulate_twin_beams(&MediumParams::new(gain, 1.0, search.stages)?, d, seed_photons)?;
    let f = |t: f64| squeezing_db(gain, t, search.stages, d, seed_photons);
    let (bracket, x, fx) = grid_bracket(f, t_min, 1.0, search.grid_points);
    Ok(match bracket {
        Bracket::Interior { lo, hi } => {
            let (transmission, squeezing_db) = golden_section(f, lo, hi, search.tolerance);
            TransmissionOptimum {
                transmission,
                squeezing_db,
                interior: transmission < 1.0 - 1e-3 && transmission > t_min + search.tolerance,
            }
        }
        Bracket::Lower | Bracket::Upper => TransmissionOptimum {
            transmission: x,
            squeezing_db: fx,
            interior: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eta(e: f64) -> DetectionParams {
        DetectionParams::new(e).unwrap()
    }

    #[test]
    fn lossless_medium_has_no_gain_optimum() {
        let err = find_optimum_gain(1.0, &eta(0.9), 1e8, &GainSearch::default()).unwrap_err();
        assert!(matches!(err, Error::NoInteriorOptimum(_)));
    }

    #[test]
    fn gain_optimum_is_a_local_minimum() {
        let search = GainSearch::default();
        let best = find_optimum_gain(0.9, &eta(0.9), 1e8, &search).unwrap();
        let s = |g: f64| squeezing_db(g, 0.9, search.stages, &eta(0.9), 1e8);
        assert!(best.gain > 1.0 && best.gain < 50.0);
        assert!((s(best.gain) - best.squeezing_db).abs() < 1e-12);
        assert!(s(best.gain - 0.5) >= best.squeezing_db);
        assert!(s(best.gain + 0.5) >= best.squeezing_db);
    }

    #[test]
    fn transmission_optimum_is_interior_at_gain_twelve() {
        let best = find_optimum_transmission(12.0, &eta(0.9), 1e8, &TransmissionSearch::default()).unwrap();
        assert!(best.interior);
        assert!(best.transmission < 1.0);
        let at_one = squeezing_db(12.0, 1.0, DEFAULT_STAGES, &eta(0.9), 1e8);
        assert!(best.squeezing_db <= at_one);
    }

    #[test]
    fn near_unit_gain_has_boundary_optimum() {
        let search = TransmissionSearch::default();
        let best = find_optimum_transmission(1.0001, &DetectionParams::ideal(), 1e8, &search).unwrap();
        assert!(!best.interior);
        // S_db falls, by less than 0.01 dB, all the way to the lower window edge
        assert_eq!(best.transmission, search.min_transmission);
        for t in crate::optimize::linspace(search.min_transmission, 1.0, 25) {
            let s = squeezing_db(1.0001, t, search.stages, &DetectionParams::ideal(), 1e8);
            assert!(s.abs() < 0.01 && s >= best.squeezing_db);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let d = eta(0.9);
        assert!(find_optimum_transmission(1.0, &d, 1e8, &TransmissionSearch::default()).is_err());
        assert!(find_optimum_transmission(0.5, &d, 1e8, &TransmissionSearch::default()).is_err());
        assert!(find_optimum_gain(0.0, &d, 1e8, &GainSearch::default()).is_err());
        assert!(find_optimum_gain(0.9, &d, -1.0, &GainSearch::default()).is_err());
    }
}
