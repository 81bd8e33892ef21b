//! Sliding-window STI for fluctuating maskers.
//!
//! The masker's per-band level is measured in each window and compared against the
//! long-term speech level; the result is the mean of the per-window indices, so
//! quiet gaps in the masker raise the index.

use serde::{Deserialize, Serialize};

use super::{
    band_snr, renormalized_weights, ti_from_apparent_snr, StiError, StiMethod, StiResult,
    StiWeights,
};
use crate::signal::{band_levels, AudioBuffer, BandLevel, OctaveFilterbank, BAND_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StitParams {
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for StitParams {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            hop_s: 0.25,
        }
    }
}

pub fn stit(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    weights: &StiWeights,
    params: StitParams,
) -> Result<StiResult, StiError> {
    let StitParams { window_s, hop_s } = params;
    if !(window_s > 0.0 && window_s.is_finite()) {
        return Err(StiError::InvalidWindow(format!(
            "window {window_s} s must be positive"
        )));
    }
    if !(hop_s > 0.0 && hop_s <= window_s) {
        return Err(StiError::InvalidWindow(format!(
            "hop {hop_s} s must lie in (0, window]"
        )));
    }
    if speech.sample_rate() != noise.sample_rate() {
        return Err(StiError::SampleRateMismatch(
            speech.sample_rate(),
            noise.sample_rate(),
        ));
    }
    let fs = noise.sample_rate() as f64;
    let window = (window_s * fs).round() as usize;
    let hop = ((hop_s * fs).round() as usize).max(1);
    if window == 0 || window > noise.len() {
        return Err(StiError::WindowTooLong {
            window_s,
            signal_s: noise.duration_secs(),
        });
    }

    let speech_levels = band_levels(speech)?;
    let bank = OctaveFilterbank::new(noise.sample_rate())?;
    let noise_bands = bank.split(noise.samples());

    // Running sums of squared band output for O(1) window powers.
    let prefix: Vec<Vec<f64>> = noise_bands
        .iter()
        .map(|band| {
            let mut acc = Vec::with_capacity(band.len() + 1);
            acc.push(0.0);
            let mut s = 0.0;
            for v in band {
                s += v * v;
                acc.push(s);
            }
            acc
        })
        .collect();

    let long_term_noise: Vec<BandLevel> = prefix
        .iter()
        .map(|p| BandLevel::from_power(p[p.len() - 1] / noise.len() as f64))
        .collect();
    let excluded: Vec<usize> = (0..BAND_COUNT)
        .filter(|&k| {
            matches!(speech_levels.0[k], BandLevel::Silent)
                && matches!(long_term_noise[k], BandLevel::Silent)
        })
        .collect();
    let effective_weights = renormalized_weights(weights, &excluded)?;

    let mut ti_sums = [0.0; BAND_COUNT];
    let mut sti_sum = 0.0;
    let mut windows = 0usize;
    let mut start = 0usize;
    while start + window <= noise.len() {
        let mut inst = 0.0;
        for k in 0..BAND_COUNT {
            if excluded.contains(&k) {
                continue;
            }
            let power = (prefix[k][start + window] - prefix[k][start]).max(0.0) / window as f64;
            let snr = band_snr(speech_levels.0[k], BandLevel::from_power(power))
                // Speech silent in a band the masker is momentarily silent in: nothing
                // is transmitted.
                .unwrap_or(super::SNR_FLOOR_DB);
            let ti = ti_from_apparent_snr(snr);
            ti_sums[k] += ti;
            inst += effective_weights[k] * ti;
        }
        sti_sum += inst.clamp(0.0, 1.0);
        windows += 1;
        start += hop;
    }
    let n = windows as f64;
    Ok(StiResult {
        sti: sti_sum / n,
        per_band_ti: ti_sums.map(|s| s / n),
        method: StiMethod::SlidingWindow,
        effective_weights,
        excluded_bands: excluded,
    })
}
