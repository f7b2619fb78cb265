use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dbm_to_mw, split_metadata, write_metadata, Metadata};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceRole {
    /// Detector dark noise.
    Electronic,
    /// Pump scatter with the probe blocked.
    Pump,
    /// Probe/conjugate intensity difference.
    Diff,
    /// Shot-noise reference.
    Sql,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct TraceRow {
    freq_hz: f64,
    noise_dbm: f64,
    role: TraceRole,
}

/// One analyzer trace, frequencies strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseTrace {
    pub role: TraceRole,
    pub freq_hz: Vec<f64>,
    pub noise_dbm: Vec<f64>,
}

impl NoiseTrace {
    pub fn new(role: TraceRole, freq_hz: Vec<f64>, noise_dbm: Vec<f64>) -> Result<Self> {
        if freq_hz.len() != noise_dbm.len() {
            return Err(Error::DimensionMismatch {
                expected: freq_hz.len(),
                found: noise_dbm.len(),
            });
        }
        if freq_hz.is_empty() {
            return Err(Error::InsufficientData(format!("{role:?} trace is empty")));
        }
        if freq_hz.iter().any(|f| !f.is_finite()) || freq_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "{role:?} trace frequencies must be finite and strictly increasing"
            )));
        }
        if noise_dbm.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::InvalidParameter(format!("{role:?} trace has invalid dBm values")));
        }
        Ok(Self { role, freq_hz, noise_dbm })
    }

    /// Linear power at `f`, interpolated in mW between neighbouring bins.
    /// Frequencies outside the trace are refused.
    pub fn linear_at(&self, f: f64) -> Result<f64> {
        let fs = &self.freq_hz;
        let (lo, hi) = (fs[0], fs[fs.len() - 1]);
        if !(f >= lo && f <= hi) {
            return Err(Error::GridMismatch(format!(
                "{f} Hz lies outside the {:?} trace ({lo}..{hi} Hz)",
                self.role
            )));
        }
        let i = fs.partition_point(|&x| x < f);
        if fs[i] == f {
            return Ok(dbm_to_mw(self.noise_dbm[i]));
        }
        let (x0, x1) = (fs[i - 1], fs[i]);
        let (y0, y1) = (dbm_to_mw(self.noise_dbm[i - 1]), dbm_to_mw(self.noise_dbm[i]));
        Ok(y0 + (y1 - y0) * (f - x0) / (x1 - x0))
    }
}

/// Traces of one measurement, at most one per role, kept in role order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TraceSet {
    pub traces: Vec<NoiseTrace>,
    pub metadata: Metadata,
}

impl TraceSet {
    pub fn new(mut traces: Vec<NoiseTrace>, metadata: Metadata) -> Result<Self> {
        traces.sort_by_key(|t| t.role);
        if let Some(w) = traces.windows(2).find(|w| w[0].role == w[1].role) {
            return Err(Error::InvalidParameter(format!("duplicate {:?} trace", w[0].role)));
        }
        Ok(Self { traces, metadata })
    }

    pub fn get(&self, role: TraceRole) -> Option<&NoiseTrace> {
        self.traces.iter().find(|t| t.role == role)
    }

    /// Parses `freq_hz,noise_dbm,role`; rows of each role keep file order.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (metadata, body) = split_metadata(text)?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<TraceRow>, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        let mut traces = Vec::new();
        for role in [TraceRole::Electronic, TraceRole::Pump, TraceRole::Diff, TraceRole::Sql] {
            let (f, p): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.role == role).map(|r| (r.freq_hz, r.noise_dbm)).unzip();
            if !f.is_empty() {
                traces.push(NoiseTrace::new(role, f, p)?);
            }
        }
        Self::new(traces, metadata)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut out = String::new();
        write_metadata(&self.metadata, &mut out);
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.traces {
            for (&freq_hz, &noise_dbm) in t.freq_hz.iter().zip(&t.noise_dbm) {
                w.serialize(TraceRow {
                    freq_hz,
                    noise_dbm,
                    role: t.role,
                })?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }
}

/// Which backgrounds are removed before taking the ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Background {
    /// Raw `diff / sql`.
    None,
    /// `(diff − electronic) / (sql − electronic)`.
    Electronic,
    /// `(diff − pump) / (sql − electronic)`; the pump trace already contains
    /// the electronic floor.
    ElectronicAndPump,
}

/// One frequency bin of a squeezing spectrum. Linear fields in mW.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumBin {
    pub freq_hz: f64,
    pub numerator_mw: f64,
    pub denominator_mw: f64,
    /// `None` where a corrected power is not positive.
    pub ratio: Option<f64>,
    pub squeezing_db: Option<f64>,
    pub feasible: bool,
}

/// Squeezing per bin of the SQL trace, other traces resampled onto its grid.
pub fn squeezing_spectrum(traces: &TraceSet, background: Background) -> Result<Vec<SpectrumBin>> {
    let need = |role| {
        traces
            .get(role)
            .ok_or_else(|| Error::InsufficientData(format!("missing {role:?} trace")))
    };
    let sql = need(TraceRole::Sql)?;
    let diff = need(TraceRole::Diff)?;
    let electronic = match background {
        Background::None => None,
        _ => Some(need(TraceRole::Electronic)?),
    };
    let pump = match background {
        Background::ElectronicAndPump => Some(need(TraceRole::Pump)?),
        _ => None,
    };
    sql.freq_hz
        .iter()
        .map(|&f| {
            let sql_mw = sql.linear_at(f)?;
            let diff_mw = diff.linear_at(f)?;
            let elec_mw = electronic.map(|t| t.linear_at(f)).transpose()?.unwrap_or(0.0);
            let num_floor = match pump {
                Some(t) => t.linear_at(f)?,
                None => elec_mw,
            };
            let numerator_mw = diff_mw - num_floor;
            let denominator_mw = sql_mw - elec_mw;
            let feasible = numerator_mw > 0.0 && denominator_mw > 0.0;
            let ratio = feasible.then(|| numerator_mw / denominator_mw);
            Ok(SpectrumBin {
                freq_hz: f,
                numerator_mw,
                denominator_mw,
                ratio,
                squeezing_db: ratio.map(|r| 10.0 * r.log10()),
                feasible,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mw_to_dbm;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 0.5e6 + 0.25e6 * i as f64).collect()
    }

    fn trace(role: TraceRole, freqs: &[f64], mw: impl Fn(f64) -> f64) -> NoiseTrace {
        NoiseTrace::new(role, freqs.to_vec(), freqs.iter().map(|&f| mw_to_dbm(mw(f)).unwrap()).collect()).unwrap()
    }

    /// Electronic floor, SQL and diff chosen so the corrected ratio is 0.1585.
    fn fixture(ratio: f64) -> TraceSet {
        let f = grid(9);
        let elec = |f: f64| 1e-10 * (1.0 + f / 4e6);
        let sql = move |f: f64| elec(f) + 3e-8 * (1.0 - f / 8e6);
        let diff = move |f: f64| elec(f) + ratio * (sql(f) - elec(f));
        TraceSet::new(
            vec![
                trace(TraceRole::Electronic, &f, elec),
                trace(TraceRole::Sql, &f, sql),
                trace(TraceRole::Diff, &f, diff),
            ],
            Metadata::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_traces_give_zero() {
        let f = grid(5);
        let set = TraceSet::new(
            vec![trace(TraceRole::Sql, &f, |f| 1e-8 + f * 1e-15), trace(TraceRole::Diff, &f, |f| 1e-8 + f * 1e-15)],
            Metadata::default(),
        )
        .unwrap();
        for b in squeezing_spectrum(&set, Background::None).unwrap() {
            assert_eq!(b.squeezing_db, Some(0.0));
        }
    }

    #[test]
    fn constructed_fixture_reads_minus_eight() {
        let out = squeezing_spectrum(&fixture(0.1585), Background::Electronic).unwrap();
        assert_eq!(out.len(), 9);
        for b in &out {
            let db = b.squeezing_db.unwrap();
            assert!((db - 10.0 * 0.1585f64.log10()).abs() < 1e-9, "{b:?}");
            assert_eq!((db * 10.0).round() / 10.0, -8.0);
        }
    }

    #[test]
    fn pump_background_applies_to_numerator() {
        let f = grid(4);
        let set = TraceSet::new(
            vec![
                trace(TraceRole::Electronic, &f, |_| 1e-10),
                trace(TraceRole::Pump, &f, |_| 5e-10),
                trace(TraceRole::Sql, &f, |_| 1e-10 + 2e-8),
                trace(TraceRole::Diff, &f, |_| 5e-10 + 4e-9),
            ],
            Metadata::default(),
        )
        .unwrap();
        for b in squeezing_spectrum(&set, Background::ElectronicAndPump).unwrap() {
            assert!((b.ratio.unwrap() - 0.2).abs() < 1e-12);
        }
        let without_pump = set.traces.iter().filter(|t| t.role != TraceRole::Pump).cloned().collect();
        let missing = TraceSet::new(without_pump, Metadata::default()).unwrap();
        assert!(matches!(
            squeezing_spectrum(&missing, Background::ElectronicAndPump),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn bins_below_floor_are_flagged() {
        let mut set = fixture(0.1585);
        let floor = set.get(TraceRole::Electronic).unwrap().noise_dbm[3];
        let diff = set.traces.iter().position(|t| t.role == TraceRole::Diff).unwrap();
        set.traces[diff].noise_dbm[3] = floor - 1.0;
        let out = squeezing_spectrum(&set, Background::Electronic).unwrap();
        assert!(!out[3].feasible && out[3].squeezing_db.is_none() && out[3].numerator_mw < 0.0);
        assert!(out.iter().enumerate().all(|(i, b)| i == 3 || b.feasible));
    }

    #[test]
    fn resampling_and_bounds() {
        let f = grid(5);
        let fine: Vec<f64> = (0..17).map(|i| 0.5e6 + 0.0625e6 * i as f64).collect();
        let line = |f: f64| 1e-9 * (2.0 + f / 1e6);
        let set = TraceSet::new(
            vec![trace(TraceRole::Sql, &f, line), trace(TraceRole::Diff, &fine, move |f| 0.5 * line(f))],
            Metadata::default(),
        )
        .unwrap();
        for b in squeezing_spectrum(&set, Background::None).unwrap() {
            assert!((b.ratio.unwrap() - 0.5).abs() < 1e-12);
        }
        // diff trace narrower than the SQL grid: no extrapolation
        let short = TraceSet::new(
            vec![trace(TraceRole::Sql, &f, line), trace(TraceRole::Diff, &f[1..], line)],
            Metadata::default(),
        )
        .unwrap();
        assert!(matches!(squeezing_spectrum(&short, Background::None), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn common_offset_leaves_spectrum_unchanged() {
        let base = fixture(0.3);
        let shift = 7e-10;
        let shifted = TraceSet::new(
            base.traces
                .iter()
                .map(|t| {
                    let p = t.noise_dbm.iter().map(|&x| mw_to_dbm(dbm_to_mw(x) + shift).unwrap()).collect();
                    NoiseTrace::new(t.role, t.freq_hz.clone(), p).unwrap()
                })
                .collect(),
            Metadata::default(),
        )
        .unwrap();
        let a = squeezing_spectrum(&base, Background::Electronic).unwrap();
        let b = squeezing_spectrum(&shifted, Background::Electronic).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.squeezing_db.unwrap() - y.squeezing_db.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_validation() {
        assert!(NoiseTrace::new(TraceRole::Sql, vec![1.0, 1.0], vec![-80.0, -80.0]).is_err());
        assert!(NoiseTrace::new(TraceRole::Sql, vec![2.0, 1.0], vec![-80.0, -80.0]).is_err());
        assert!(NoiseTrace::new(TraceRole::Sql, vec![], vec![]).is_err());
        assert!(NoiseTrace::new(TraceRole::Sql, vec![1.0], vec![-80.0, -81.0]).is_err());
        let t = trace(TraceRole::Sql, &grid(3), |_| 1e-9);
        assert!(TraceSet::new(vec![t.clone(), t], Metadata::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let set = fixture(0.1585);
        let text = set.to_csv_string().unwrap();
        assert!(text.starts_with("freq_hz,noise_dbm,role\n"));
        assert_eq!(TraceSet::from_csv_str(&text).unwrap(), set);
        assert!(TraceSet::from_csv_str("freq_hz,noise_dbm,role\n1,-80,probe\n").is_err());
        assert!(TraceSet::from_csv_str("freq_hz,noise_dbm,role\n2,-80,sql\n1,-80,sql\n").is_err());
    }
}
