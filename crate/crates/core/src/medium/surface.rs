use rayon::prelude::*;
use serde::Serialize;

use super::{simulate_twin_beams, DetectionParams, MediumParams, DEFAULT_STAGES};
use crate::error::{Error, Result};
use crate::optimize::linspace;

/// Uniform axis `[min, max]` sampled at `steps` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.steps)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParameter(format!("{name} axis needs at least 2 steps")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidParameter(format!(
                "{name} axis range [{}, {}] is empty or degenerate",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfaceSpec {
    pub transmission: AxisSpec,
    pub gain: AxisSpec,
    pub stages: usize,
}

impl SurfaceSpec {
    pub fn new(transmission: AxisSpec, gain: AxisSpec) -> Self {
        Self {
            transmission,
            gain,
            stages: DEFAULT_STAGES,
        }
    }

    fn validate(&self) -> Result<()> {
        self.transmission.validate("transmission")?;
        self.gain.validate("gain")?;
        if self.transmission.min <= 0.0 || self.transmission.max > 1.0 {
            return Err(Error::InvalidTransmission(if self.transmission.min <= 0.0 {
                self.transmission.min
            } else {
                self.transmission.max
            }));
        }
        if self.gain.min < 1.0 {
            return Err(Error::InvalidGain(self.gain.min));
        }
        if self.stages == 0 {
            return Err(Error::InvalidStages(0));
        }
        Ok(())
    }
}

/// Detected squeezing in dB over a transmission × gain grid.
///
/// Values are row-major with transmission as the row (slow) index and gain
/// as the column (fast) index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub spec: SurfaceSpec,
    pub efficiency: f64,
    pub seed_photons: f64,
    pub squeezing_db: Vec<f64>,
}

impl SurfaceGrid {
    pub fn transmissions(&self) -> Vec<f64> {
        self.spec.transmission.values()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.spec.gain.values()
    }

    pub fn at(&self, t_index: usize, g_index: usize) -> f64 {
        self.squeezing_db[t_index * self.spec.gain.steps + g_index]
    }

    /// Long-form `(transmission, gain, squeezing_db)` rows in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ts = self.transmissions();
        let gs = self.gains();
        let n = gs.len();
        self.squeezing_db
            .iter()
            .enumerate()
            .map(move |(k, &v)| (ts[k / n], gs[k % n], v))
    }

    /// Grid node with the smallest squeezing value, as `(T, G, S_db)`.
    pub fn minimum(&self) -> (f64, f64, f64) {
        self.rows()
            .fold((f64::NAN, f64::NAN, f64::INFINITY), |acc, r| if r.2 < acc.2 { r } else { acc })
    }
}

/// Evaluates the detected squeezing at every grid node. Nodes are
/// independent and computed in parallel; the result does not depend on
/// evaluation order.
pub fn squeezing_surface(spec: &SurfaceSpec, d: &DetectionParams, seed_photons: f64) -> Result<SurfaceGrid> {
    spec.validate()?;
    let ts = spec.transmission.values();
    let gs = spec.gain.values();
    let nodes: Vec<(f64, f64)> = ts.iter().flat_map(|&t| gs.iter().map(move |&g| (t, g))).collect();
    let values = nodes
        .par_iter()
        .map(|&(t, g)| {
            let p = MediumParams::new(g, t, spec.stages)?;
            let db = simulate_twin_beams(&p, d, seed_photons)?.squeezing_db;
            if db.is_finite() {
                Ok(db)
            } else {
                Err(Error::InvalidParameter(format!("non-finite squeezing at T={t}, G={g}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SurfaceGrid {
        spec: *spec,
        efficiency: d.efficiency,
        seed_photons,
        squeezing_db: values,
    })
}
