use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{dbm_to_mw, mw_to_dbm, split_metadata, write_metadata, Metadata};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Balanced coherent beams at the shot-noise level.
    Sql,
    /// Probe/conjugate intensity difference.
    Fwm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub total_power_uw: f64,
    pub noise_dbm: f64,
    pub kind: SweepKind,
}

/// Noise power at a fixed analysis frequency against total optical power.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PowerSweep {
    pub records: Vec<SweepRecord>,
    pub metadata: Metadata,
}

impl PowerSweep {
    pub fn new(records: Vec<SweepRecord>, metadata: Metadata) -> Result<Self> {
        for r in &records {
            if !(r.total_power_uw.is_finite() && r.total_power_uw >= 0.0) {
                return Err(Error::InvalidParameter(format!("optical power {} µW", r.total_power_uw)));
            }
            if !r.noise_dbm.is_finite() {
                return Err(Error::InvalidParameter(format!("noise power {} dBm", r.noise_dbm)));
            }
        }
        Ok(Self { records, metadata })
    }

    /// Parses `total_power_uw,noise_dbm,kind` with optional `#` metadata.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let (metadata, body) = split_metadata(text)?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let records = reader
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRecord>, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(records, metadata)
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
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }

    /// `(power µW, noise mW)` pairs of one kind.
    pub fn linear_points(&self, kind: SweepKind) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| (r.total_power_uw, dbm_to_mw(r.noise_dbm)))
            .unzip()
    }
}

/// Least-squares line in linear units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    /// mW per µW.
    pub slope: f64,
    /// Zero-power noise floor, mW.
    pub intercept: f64,
    /// `√(Σr²/n)`, mW.
    pub residual_rms: f64,
    /// Standard error of the slope; 0 for an exactly determined fit.
    pub slope_stderr: f64,
    pub points: usize,
}

impl LinearFit {
    /// Intercept in dBm, if positive.
    pub fn intercept_dbm(&self) -> Option<f64> {
        mw_to_dbm(self.intercept).ok()
    }
}

/// Ordinary least squares `y = slope·x + intercept` on centred data.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points, need at least 2")));
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let scale: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 1e-24 * scale) {
        return Err(Error::RankDeficient("all powers are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let slope_stderr = if n > 2 { (ssr / (n - 2) as f64 / sxx).sqrt() } else { 0.0 };
    Ok(LinearFit {
        slope,
        intercept,
        residual_rms: (ssr / n as f64).sqrt(),
        slope_stderr,
        points: n,
    })
}

pub fn fit_noise_vs_power(sweep: &PowerSweep, kind: SweepKind) -> Result<LinearFit> {
    let (x, y) = sweep.linear_points(kind);
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!("{} {kind:?} records, need at least 2", x.len())));
    }
    fit_line(&x, &y)
}

/// `10·log10(fwm.slope / sql.slope)`.
pub fn slope_ratio_db(fwm: &LinearFit, sql: &LinearFit) -> Result<f64> {
    for (name, s) in [("fwm", fwm.slope), ("sql", sql.slope)] {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} slope {s} is not positive")));
        }
    }
    Ok(10.0 * (fwm.slope / sql.slope).log10())
}

/// Signal minus background, both in dBm, returned in mW. A background of
/// `-inf` means none.
pub fn correct_system_noise(signal_dbm: f64, background_dbm: f64) -> Result<f64> {
    let corrected = dbm_to_mw(signal_dbm) - dbm_to_mw(background_dbm);
    if !(corrected > 0.0) {
        return Err(Error::NegativeCorrectedPower(format!(
            "signal {signal_dbm} dBm does not exceed background {background_dbm} dBm"
        )));
    }
    Ok(corrected)
}
