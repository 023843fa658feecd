//! The discretized day and power time series over it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::units::{MINUTES_PER_DAY, MINUTES_PER_HOUR};

/// A day split into `slots` equal intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    slots: usize,
}

impl TimeGrid {
    pub fn new(slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::config("slots", "must be at least 1"));
        }
        Ok(Self { slots })
    }

    /// Number of slots `T`.
    pub fn len(&self) -> usize {
        self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.slots == 0
    }

    pub fn dt_minutes(&self) -> f64 {
        f64::from(MINUTES_PER_DAY) / self.slots as f64
    }

    pub fn dt_hours(&self) -> f64 {
        self.dt_minutes() / MINUTES_PER_HOUR
    }

    /// Whole number of slots spanned by `minutes`, or `None` when `minutes`
    /// is not a multiple of the slot length.
    pub fn slots_for_minutes(&self, minutes: u32) -> Option<usize> {
        let scaled = u64::from(minutes) * self.slots as u64;
        let day = u64::from(MINUTES_PER_DAY);
        scaled.is_multiple_of(day).then(|| (scaled / day) as usize)
    }

    /// Minutes after midnight at the start of `slot`.
    pub fn minutes_at(&self, slot: usize) -> f64 {
        slot as f64 * self.dt_minutes()
    }
}

/// A kW time series of length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoadProfile(Vec<f64>);

impl LoadProfile {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn constant(len: usize, kw: f64) -> Self {
        Self(vec![kw; len])
    }

    /// Builds a profile from external data, rejecting negative or non-finite
    /// entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((t, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::config(
                format!("profile[{t}]"),
                format!("load must be finite and nonnegative, got {v}"),
            ));
        }
        Ok(Self(values))
    }

    /// Wraps values produced internally (differences of profiles may carry
    /// rounding residue around zero).
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.0[slot]
    }

    /// Maximum entry; 0 for an empty profile.
    pub fn peak(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn energy_kwh(&self, grid: &TimeGrid) -> f64 {
        self.sum() * grid.dt_hours()
    }

    pub fn add_assign(&mut self, other: &LoadProfile) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += *b;
        }
    }

    pub fn sub_assign(&mut self, other: &LoadProfile) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= *b;
        }
    }

    /// Applies `new - old` only at slots where the two differ, so untouched
    /// slots keep their exact value.
    pub fn apply_change(&mut self, old: &LoadProfile, new: &LoadProfile) {
        for ((a, o), n) in self.0.iter_mut().zip(&old.0).zip(&new.0) {
            if o != n {
                *a += *n - *o;
            }
        }
    }

    /// Short hex fingerprint of the exact bit pattern, used in protocol traces.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.0 {
            hasher.update(v.to_le_bytes());
        }
        let full = hex::encode(hasher.finalize());
        full[..16].to_string()
    }
}

impl std::ops::Index<usize> for LoadProfile {
    type Output = f64;

    fn index(&self, slot: usize) -> &f64 {
        &self.0[slot]
    }
}
