use serde::{Deserialize, Serialize};

use super::StimulusError;
use crate::intelligibility::{sti_from_band_levels, StiWeights};
use crate::signal::{band_levels, AudioBuffer, BandLevels};

/// Search bracket on masker gain, dB re the supplied babble.
pub const BRACKET_DB: (f64, f64) = (-40.0, 40.0);
pub const MAX_BISECTIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Linear gain applied to the babble.
    pub gain: f64,
    pub gain_db: f64,
    pub achieved_sti: f64,
    pub iterations: usize,
    /// Final bracket, dB.
    pub bracket_db: (f64, f64),
}

/// Find the babble gain at which the speech/babble STI hits `target`.
///
/// STI is non-increasing in masker gain, so bisection on the dB gain converges; the
/// search stops once the STI is within a hundredth of `tolerance` of the target.
pub fn calibrate_gain_for_sti(
    speech: &AudioBuffer,
    babble: &AudioBuffer,
    target: f64,
    tolerance: f64,
    weights: &StiWeights,
) -> Result<Calibration, StimulusError> {
    if speech.sample_rate() != babble.sample_rate() {
        return Err(StimulusError::SampleRateMismatch(
            speech.sample_rate(),
            babble.sample_rate(),
        ));
    }
    calibrate_from_levels(
        &band_levels(speech)?,
        &band_levels(babble)?,
        target,
        tolerance,
        weights,
    )
}

pub fn calibrate_from_levels(
    speech: &BandLevels,
    babble: &BandLevels,
    target: f64,
    tolerance: f64,
    weights: &StiWeights,
) -> Result<Calibration, StimulusError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(StimulusError::InvalidSpec(format!(
            "target STI {target} outside (0, 1]"
        )));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(StimulusError::InvalidSpec(format!(
            "tolerance {tolerance} must be positive"
        )));
    }
    if babble.is_all_silent() {
        return Err(StimulusError::InvalidSpec("babble is silent".into()));
    }
    if target >= 1.0 {
        return Err(StimulusError::RequiresSilentMasker);
    }
    let sti_at = |gain_db: f64| -> Result<f64, StimulusError> {
        Ok(sti_from_band_levels(speech, &babble.offset(gain_db), weights)?.sti)
    };

    let (mut lo, mut hi) = BRACKET_DB;
    let (mut sti_lo, mut sti_hi) = (sti_at(lo)?, sti_at(hi)?);
    if sti_lo < sti_hi {
        return Err(StimulusError::NonMonotone { lo, hi });
    }
    if target < sti_hi - tolerance {
        return Err(StimulusError::MaskerCeiling {
            target,
            lowest: sti_hi,
        });
    }
    if target > sti_lo + tolerance {
        return Err(StimulusError::MaskerFloor {
            target,
            highest: sti_lo,
        });
    }

    let mut best = if (sti_lo - target).abs() <= (sti_hi - target).abs() {
        (lo, sti_lo)
    } else {
        (hi, sti_hi)
    };
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && (best.1 - target).abs() > tolerance / 100.0 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let s = sti_at(mid)?;
        if s > sti_lo || s < sti_hi {
            return Err(StimulusError::NonMonotone { lo, hi });
        }
        if (s - target).abs() < (best.1 - target).abs() {
            best = (mid, s);
        }
        if s > target {
            lo = mid;
            sti_lo = s;
        } else {
            hi = mid;
            sti_hi = s;
        }
    }
    let (gain_db, achieved_sti) = best;
    if (achieved_sti - target).abs() > tolerance {
        return Err(StimulusError::NotConverged {
            target,
            achieved: achieved_sti,
        });
    }
    Ok(Calibration {
        gain: 10f64.powf(gain_db / 20.0),
        gain_db,
        achieved_sti,
        iterations,
        bracket_db: (lo, hi),
    })
}
