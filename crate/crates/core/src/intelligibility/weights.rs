use serde::{Deserialize, Serialize};

use super::StiError;
use crate::signal::{BAND_COUNT, OCTAVE_CENTERS};

pub const DEFAULT_WEIGHTS: &str = include_str!("../../data/sti_weights_octave.txt");

/// Octave-band weights; non-negative, summing to 1 within ±0.01.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; BAND_COUNT]", into = "[f64; BAND_COUNT]")]
pub struct StiWeights([f64; BAND_COUNT]);

impl StiWeights {
    pub fn new(w: [f64; BAND_COUNT]) -> Result<Self, StiError> {
        if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(StiError::InvalidWeights(format!(
                "weight {v} is negative or not finite"
            )));
        }
        let sum: f64 = w.iter().sum();
        if !(0.99..=1.01).contains(&sum) {
            return Err(StiError::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 ± 0.01"
            )));
        }
        Ok(Self(w))
    }

    pub fn uniform() -> Self {
        Self([1.0 / BAND_COUNT as f64; BAND_COUNT])
    }

    pub fn default_male() -> Self {
        Self::parse(DEFAULT_WEIGHTS).expect("bundled weights parse")
    }

    /// Parse seven `centre_hz weight` lines in band order (125 Hz .. 8 kHz).
    pub fn parse(text: &str) -> Result<Self, StiError> {
        let pairs = crate::signal::ltass::parse_pairs(text)?;
        if pairs.len() != BAND_COUNT {
            return Err(StiError::InvalidWeights(format!(
                "expected {BAND_COUNT} bands, found {}",
                pairs.len()
            )));
        }
        let mut w = [0.0; BAND_COUNT];
        for (k, (&(f, v), &fc)) in pairs.iter().zip(&OCTAVE_CENTERS).enumerate() {
            if (f - fc).abs() > 1e-6 * fc {
                return Err(StiError::InvalidWeights(format!(
                    "band {} should be centred at {fc} Hz, found {f}",
                    k + 1
                )));
            }
            w[k] = v;
        }
        Self::new(w)
    }

    pub fn values(&self) -> &[f64; BAND_COUNT] {
        &self.0
    }
}

impl TryFrom<[f64; BAND_COUNT]> for StiWeights {
    type Error = StiError;

    fn try_from(w: [f64; BAND_COUNT]) -> Result<Self, StiError> {
        Self::new(w)
    }
}

impl From<StiWeights> for [f64; BAND_COUNT] {
    fn from(w: StiWeights) -> Self {
        w.0
    }
}
