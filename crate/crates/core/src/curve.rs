//! Normalized daily load-curve shapes.
//!
//! The bundled shape is a synthetic summer weekday for a residential feeder:
//! overnight trough around 4 am, a small morning shoulder, and a broad late
//! afternoon peak. It is stored as 288 five-minute values with mean 1.

use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_CSV: &str = include_str!("../data/summer_residential_288.csv");

pub const CURVE_ROWS: usize = 288;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadCurve {
    values: Vec<f64>,
}

impl LoadCurve {
    pub fn bundled() -> Self {
        Self::from_csv_str(BUNDLED_CSV).expect("bundled curve is well formed")
    }

    /// Parses one value per row. Blank lines and a non-numeric header row are
    /// skipped. The result is rescaled to mean 1.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut values = Vec::with_capacity(CURVE_ROWS);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
                Ok(v) => {
                    return Err(Error::config(
                        format!("curve row {}", i + 1),
                        format!("value must be finite and nonnegative, got {v}"),
                    ))
                }
                Err(_) if i == 0 => continue,
                Err(_) => {
                    return Err(Error::config(
                        format!("curve row {}", i + 1),
                        format!("not a number: {line:?}"),
                    ))
                }
            }
        }
        if values.len() != CURVE_ROWS {
            return Err(Error::config(
                "curve",
                format!("expected {CURVE_ROWS} rows, found {}", values.len()),
            ));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean <= 0.0 {
            return Err(Error::config("curve", "curve is identically zero"));
        }
        Ok(Self {
            values: values.into_iter().map(|v| v / mean).collect(),
        })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("curve", format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The shape on a `slots`-slot day, sampled at slot midpoints with
    /// periodic linear interpolation and rescaled to mean 1.
    pub fn resample(&self, slots: usize) -> Vec<f64> {
        if slots == self.values.len() {
            return self.values.clone();
        }
        let n = self.values.len();
        let raw: Vec<f64> = (0..slots)
            .map(|t| {
                // Position in source-slot units, measured from source slot centers.
                let pos = (t as f64 + 0.5) * n as f64 / slots as f64 - 0.5;
                let base = pos.floor();
                let frac = pos - base;
                let i0 = (base as i64).rem_euclid(n as i64) as usize;
                let i1 = (i0 + 1) % n;
                self.values[i0] * (1.0 - frac) + self.values[i1] * frac
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / slots as f64;
        raw.into_iter().map(|v| v / mean).collect()
    }
}
