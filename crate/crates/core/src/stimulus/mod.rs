//! Background-sound conditions: LTASS-shaped, RMS-normalized speech and babble mixed
//! at the masker gain that puts the mixture on an STI target, then set to a
//! calibrated presentation level.

mod assemble;
mod babble;
mod calibrate;
mod manifest;

use serde::{Deserialize, Serialize};

use crate::intelligibility::StiError;
use crate::signal::SignalError;

pub use assemble::{assemble, LoopingConfig};
pub use babble::synth_babble;
pub use calibrate::{
    calibrate_from_levels, calibrate_gain_for_sti, Calibration, BRACKET_DB, MAX_BISECTIONS,
};
pub use manifest::{
    build_condition, rebuild_from_manifest, BuildConfig, OutputRef, SourceRef, StimulusManifest,
    MANIFEST_SCHEMA_VERSION,
};

/// The four masked conditions of the protocol.
pub const CONDITION_TARGETS: [f64; 4] = [0.25, 0.45, 0.75, 0.9];

#[derive(Debug, thiserror::Error)]
pub enum StimulusError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Sti(#[from] StiError),
    #[error("invalid stimulus spec: {0}")]
    InvalidSpec(String),
    #[error("unreachable: requires silent masker")]
    RequiresSilentMasker,
    #[error("unreachable: masker ceiling (target {target}, lowest reachable STI {lowest:.4})")]
    MaskerCeiling { target: f64, lowest: f64 },
    #[error("unreachable: masker floor (target {target}, highest reachable STI {highest:.4})")]
    MaskerFloor { target: f64, highest: f64 },
    #[error("internal consistency: STI not monotone in masker gain on [{lo}, {hi}] dB")]
    NonMonotone { lo: f64, hi: f64 },
    #[error("calibration did not converge (target {target}, best {achieved})")]
    NotConverged { target: f64, achieved: f64 },
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("sources too short: {available_s:.2} s available, {required_s:.2} s required and looping disabled")]
    SourcesTooShort { available_s: f64, required_s: f64 },
    #[error("insufficient material: {0}")]
    InsufficientMaterial(String),
    #[error("output peak {peak:.3} exceeds full scale; lower the presentation level or raise the calibration offset")]
    Clipping { peak: f64 },
    #[error("{which} source checksum {found} does not match manifest {expected}")]
    SourceMismatch {
        which: &'static str,
        expected: String,
        found: String,
    },
    #[error("rebuilt output checksum {found} does not match manifest {expected}")]
    OutputMismatch { expected: String, found: String },
}

/// Recipe for one condition. `target_sti = None` is the silent control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusSpec {
    pub target_sti: Option<f64>,
    pub duration_s: f64,
    pub presentation_level_db: f64,
    pub sti_tolerance: f64,
    pub seed: u64,
}

impl StimulusSpec {
    pub fn new(target_sti: f64, seed: u64) -> Self {
        Self {
            target_sti: Some(target_sti),
            ..Self::control(seed)
        }
    }

    pub fn control(seed: u64) -> Self {
        Self {
            target_sti: None,
            duration_s: 540.0,
            presentation_level_db: 55.0,
            sti_tolerance: 0.01,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), StimulusError> {
        if let Some(t) = self.target_sti {
            if !(t > 0.0 && t <= 1.0) {
                return Err(StimulusError::InvalidSpec(format!(
                    "target STI {t} outside (0, 1]"
                )));
            }
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(StimulusError::InvalidSpec(format!(
                "duration {} s must be positive",
                self.duration_s
            )));
        }
        if self.sti_tolerance.is_nan() || self.sti_tolerance <= 0.0 {
            return Err(StimulusError::InvalidSpec(format!(
                "tolerance {} must be positive",
                self.sti_tolerance
            )));
        }
        if !self.presentation_level_db.is_finite() {
            return Err(StimulusError::InvalidSpec(
                "presentation level must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Stable identifier: `silence` or `sti_<target>`.
    pub fn condition_id(&self) -> String {
        match self.target_sti {
            None => "silence".to_string(),
            Some(t) => format!("sti_{t}"),
        }
    }
}
