//! Speech Transmission Index.
//!
//! Per octave band k and modulation frequency i, the apparent SNR is clipped to
//! ±15 dB and mapped to a transmission index `(snr + 15) / 30`. Band indices are
//! the mean over the 14 modulation frequencies, and the STI is their weighted sum.

mod sliding;
mod weights;

use serde::{Deserialize, Serialize};

use crate::signal::{band_levels, AudioBuffer, BandLevel, BandLevels, SignalError, BAND_COUNT};

pub use sliding::{stit, StitParams};
pub use weights::StiWeights;

pub const MODULATION_COUNT: usize = 14;

/// Apparent SNR at which speech is fully intelligible (TI = 1).
pub const SNR_CEILING_DB: f64 = 15.0;
/// Apparent SNR at which speech is unintelligible (TI = 0).
pub const SNR_FLOOR_DB: f64 = -15.0;

#[derive(Debug, thiserror::Error)]
pub enum StiError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(
        "expected a {expected_rows}x{expected_cols} matrix, got {rows} rows with {cols} columns"
    )]
    Dimension {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("transmission index {0} outside [0, 1]")]
    TiOutOfRange(f64),
    #[error("modulation reduction factor {0} outside [0, 1]")]
    MtfOutOfRange(f64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("sample rates differ: speech {0} Hz, noise {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("speech and noise are silent in every band")]
    AllBandsSilent,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("window of {window_s} s is longer than the {signal_s} s signal")]
    WindowTooLong { window_s: f64, signal_s: f64 },
}

/// Third-octave modulation frequencies 0.63 .. 12.5 Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationGrid(pub [f64; MODULATION_COUNT]);

pub fn modulation_grid() -> ModulationGrid {
    ModulationGrid([
        0.63, 0.8, 1.0, 1.25, 1.6, 2.0, 2.5, 3.15, 4.0, 5.0, 6.3, 8.0, 10.0, 12.5,
    ])
}

/// Clipped apparent signal-to-noise ratio, dB.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ApparentSnr(f64);

impl ApparentSnr {
    pub fn new(snr_db: f64) -> Self {
        ApparentSnr(if snr_db.is_nan() {
            SNR_FLOOR_DB
        } else {
            snr_db.clamp(SNR_FLOOR_DB, SNR_CEILING_DB)
        })
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

pub fn ti_from_apparent_snr(snr_db: f64) -> f64 {
    (ApparentSnr::new(snr_db).db() - SNR_FLOOR_DB) / (SNR_CEILING_DB - SNR_FLOOR_DB)
}

/// Modulation reduction factor for stationary noise at `snr_db`.
pub fn mtf_stationary(snr_db: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-snr_db / 10.0))
}

pub fn apparent_snr_from_mtf(m: f64) -> Result<ApparentSnr, StiError> {
    if !(0.0..=1.0).contains(&m) {
        return Err(StiError::MtfOutOfRange(m));
    }
    if m == 0.0 {
        return Ok(ApparentSnr::new(SNR_FLOOR_DB));
    }
    if m == 1.0 {
        return Ok(ApparentSnr::new(SNR_CEILING_DB));
    }
    Ok(ApparentSnr::new(10.0 * (m / (1.0 - m)).log10()))
}

/// Transmission indices, one row per octave band, one column per modulation frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiMatrix([[f64; MODULATION_COUNT]; BAND_COUNT]);

impl TiMatrix {
    pub fn new(ti: [[f64; MODULATION_COUNT]; BAND_COUNT]) -> Result<Self, StiError> {
        for row in &ti {
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(StiError::TiOutOfRange(v));
                }
            }
        }
        Ok(Self(ti))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, StiError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.len() != BAND_COUNT || rows.iter().any(|r| r.len() != MODULATION_COUNT) {
            return Err(StiError::Dimension {
                expected_rows: BAND_COUNT,
                expected_cols: MODULATION_COUNT,
                rows: rows.len(),
                cols,
            });
        }
        let mut ti = [[0.0; MODULATION_COUNT]; BAND_COUNT];
        for (dst, src) in ti.iter_mut().zip(rows) {
            dst.copy_from_slice(src);
        }
        Self::new(ti)
    }

    /// Matrix with the same value in every modulation column of a band.
    pub fn from_band_values(values: [f64; BAND_COUNT]) -> Result<Self, StiError> {
        Self::new(values.map(|v| [v; MODULATION_COUNT]))
    }

    pub fn rows(&self) -> &[[f64; MODULATION_COUNT]; BAND_COUNT] {
        &self.0
    }

    pub fn band_means(&self) -> [f64; BAND_COUNT] {
        self.0
            .map(|row| row.iter().sum::<f64>() / MODULATION_COUNT as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StiMethod {
    StationarySnr,
    Mtf,
    SlidingWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StiResult {
    pub sti: f64,
    pub per_band_ti: [f64; BAND_COUNT],
    pub method: StiMethod,
    /// Weights actually applied, after renormalizing away excluded bands.
    pub effective_weights: [f64; BAND_COUNT],
    /// Bands silent in both speech and noise, left out of the sum.
    pub excluded_bands: Vec<usize>,
}

fn weighted(per_band_ti: [f64; BAND_COUNT], weights: [f64; BAND_COUNT]) -> f64 {
    let s: f64 = per_band_ti.iter().zip(&weights).map(|(t, w)| t * w).sum();
    s.clamp(0.0, 1.0)
}

pub fn sti(ti: &TiMatrix, weights: &StiWeights) -> StiResult {
    let per_band_ti = ti.band_means();
    let effective_weights = *weights.values();
    StiResult {
        sti: weighted(per_band_ti, effective_weights),
        per_band_ti,
        method: StiMethod::Mtf,
        effective_weights,
        excluded_bands: Vec::new(),
    }
}

/// Apparent SNR of one band; `None` when both levels are silent.
pub(crate) fn band_snr(speech: BandLevel, noise: BandLevel) -> Option<f64> {
    match (speech, noise) {
        (BandLevel::Silent, BandLevel::Silent) => None,
        (_, BandLevel::Silent) => Some(SNR_CEILING_DB),
        (BandLevel::Silent, _) => Some(SNR_FLOOR_DB),
        (BandLevel::Db(s), BandLevel::Db(n)) => Some(s - n),
    }
}

pub(crate) fn renormalized_weights(
    weights: &StiWeights,
    excluded: &[usize],
) -> Result<[f64; BAND_COUNT], StiError> {
    let mut w = *weights.values();
    for &k in excluded {
        w[k] = 0.0;
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(StiError::AllBandsSilent);
    }
    Ok(w.map(|v| v / total))
}

/// Stationary-noise STI from per-band speech and noise levels.
///
/// For stationary noise the apparent SNR equals the band SNR at every modulation
/// frequency, so every row of the TI matrix is constant.
pub fn sti_from_band_levels(
    speech: &BandLevels,
    noise: &BandLevels,
    weights: &StiWeights,
) -> Result<StiResult, StiError> {
    let snrs: Vec<Option<f64>> = speech
        .iter()
        .zip(noise.iter())
        .map(|(s, n)| band_snr(s, n))
        .collect();
    let excluded: Vec<usize> = (0..BAND_COUNT).filter(|&k| snrs[k].is_none()).collect();
    let effective_weights = renormalized_weights(weights, &excluded)?;
    let mut band_ti = [0.0; BAND_COUNT];
    for (k, snr) in snrs.iter().enumerate() {
        if let Some(snr) = snr {
            band_ti[k] = ti_from_apparent_snr(*snr);
        }
    }
    let matrix = TiMatrix::from_band_values(band_ti)?;
    let per_band_ti = matrix.band_means();
    Ok(StiResult {
        sti: weighted(per_band_ti, effective_weights),
        per_band_ti,
        method: StiMethod::StationarySnr,
        effective_weights,
        excluded_bands: excluded,
    })
}

pub fn sti_from_signals(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    weights: &StiWeights,
) -> Result<StiResult, StiError> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(StiError::SampleRateMismatch(
            speech.sample_rate(),
            noise.sample_rate(),
        ));
    }
    sti_from_band_levels(&band_levels(speech)?, &band_levels(noise)?, weights)
}
