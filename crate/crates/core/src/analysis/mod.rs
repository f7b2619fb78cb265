//! Measurement-data reduction: unit arithmetic, noise-versus-power fits and
//! squeezing spectra from spectrum-analyzer traces.
//!
//! Files carry dBm; every fit, subtraction and ratio is done in linear mW.

mod spectrum;
mod sweep;

pub use spectrum::{squeezing_spectrum, Background, NoiseTrace, SpectrumBin, TraceRole, TraceSet};
pub use sweep::{
    correct_system_noise, fit_line, fit_noise_vs_power, slope_ratio_db, LinearFit, PowerSweep, SweepKind, SweepRecord,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// `10^(x/10)` mW. `-inf` dBm maps to 0.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> Result<f64> {
    if !(mw > 0.0) || !mw.is_finite() {
        return Err(Error::NonPositivePower(mw));
    }
    Ok(10.0 * mw.log10())
}

/// Analyzer settings carried in `# key=value` comment lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub freq_hz: Option<f64>,
    pub rbw_hz: Option<f64>,
    pub vbw_hz: Option<f64>,
}

/// Splits CSV text into its `#` metadata and the remaining table.
fn split_metadata(text: &str) -> Result<(Metadata, String)> {
    let mut meta = Metadata::default();
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            body.push_str(line);
            body.push('\n');
            continue;
        };
        for token in comment.split(|c: char| c.is_whitespace() || c == ',') {
            let Some((key, value)) = token.split_once('=') else {
                continue;
            };
            let slot = match key.trim() {
                "freq_hz" => &mut meta.freq_hz,
                "rbw_hz" => &mut meta.rbw_hz,
                "vbw_hz" => &mut meta.vbw_hz,
                _ => continue,
            };
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("metadata {key}={value}")))?;
            *slot = Some(v);
        }
    }
    Ok((meta, body))
}

fn write_metadata(meta: &Metadata, out: &mut String) {
    for (key, value) in [("freq_hz", meta.freq_hz), ("rbw_hz", meta.rbw_hz), ("vbw_hz", meta.vbw_hz)] {
        if let Some(v) = value {
            out.push_str(&format!("# {key}={v:e}\n"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert_eq!(dbm_to_mw(0.0), 1.0);
        assert!((dbm_to_mw(-82.9) - 5.1286e-9).abs() < 1e-13);
        assert_eq!(dbm_to_mw(f64::NEG_INFINITY), 0.0);
        for x in [-120.0, -82.9, -3.0, 0.0, 17.5] {
            assert!((mw_to_dbm(dbm_to_mw(x)).unwrap() - x).abs() < 1e-12);
        }
        assert!(matches!(mw_to_dbm(0.0), Err(Error::NonPositivePower(_))));
        assert!(mw_to_dbm(-1.0).is_err());
        assert!(mw_to_dbm(f64::NAN).is_err());
    }

    #[test]
    fn metadata_parsing() {
        let text = "# freq_hz=1e6, rbw_hz=30000\n#vbw_hz=300 note=x\na,b\n1,2\n";
        let (meta, body) = split_metadata(text).unwrap();
        assert_eq!(meta.freq_hz, Some(1e6));
        assert_eq!(meta.rbw_hz, Some(3e4));
        assert_eq!(meta.vbw_hz, Some(300.0));
        assert_eq!(body, "a,b\n1,2\n");
        assert!(split_metadata("# rbw_hz=abc\n").is_err());
    }
}
