use serde::{Deserialize, Serialize};

use super::{
    assemble, calibrate_from_levels, Calibration, LoopingConfig, StimulusError, StimulusSpec,
};
use crate::intelligibility::{sti_from_band_levels, StiWeights};
use crate::rng::substream;
use crate::signal::{
    a_weighted_level, apply_ltass, band_levels, normalize_rms, AudioBuffer, ShapingConfig,
    SoundLevel, SpectrumProfile,
};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Everything besides the spec and the sources that determines the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub profile: SpectrumProfile,
    pub weights: StiWeights,
    /// SPL in dB that a digital RMS of 1.0 maps to at the listening position.
    pub calibration_offset_db: f64,
    pub shaping: ShapingConfig,
    pub looping: LoopingConfig,
    /// Common RMS of speech and babble after normalization, before mixing.
    pub reference_rms: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            profile: SpectrumProfile::default_male(),
            weights: StiWeights::default_male(),
            calibration_offset_db: 100.0,
            shaping: ShapingConfig::default(),
            looping: LoopingConfig::default(),
            reference_rms: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    /// Where the source was loaded from, if it came from a file.
    pub path: Option<String>,
    /// Checksum of the decoded samples ([`AudioBuffer::checksum`]).
    pub sha256: String,
}

impl SourceRef {
    pub fn of(buffer: &AudioBuffer, path: Option<String>) -> Self {
        Self {
            path,
            sha256: buffer.checksum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRef {
    pub samples: usize,
    pub sample_rate: u32,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusManifest {
    pub schema_version: u32,
    pub condition_id: String,
    pub control: bool,
    pub spec: StimulusSpec,
    pub config: BuildConfig,
    /// Linear masker gain relative to the normalized babble; 0 for the control.
    pub babble_gain: f64,
    /// Linear gain taking the mixture to the presentation level; 0 for the control.
    pub level_gain: f64,
    pub achieved_sti: Option<f64>,
    pub achieved_level_db: Option<f64>,
    pub calibration: Option<Calibration>,
    pub speech_source: Option<SourceRef>,
    pub babble_source: Option<SourceRef>,
    pub processing_chain: Vec<String>,
    pub output: OutputRef,
}

/// Build one condition signal and its manifest. The control condition ignores the
/// source content and emits zeros at the speech sample rate.
pub fn build_condition(
    speech: &AudioBuffer,
    babble: &AudioBuffer,
    spec: &StimulusSpec,
    config: &BuildConfig,
) -> Result<(AudioBuffer, StimulusManifest), StimulusError> {
    spec.validate()?;
    let fs = speech.sample_rate();
    if babble.sample_rate() != fs {
        return Err(StimulusError::SampleRateMismatch(fs, babble.sample_rate()));
    }
    let len = (spec.duration_s * fs as f64).round() as usize;
    let speech_source = Some(SourceRef::of(speech, None));
    let babble_source = Some(SourceRef::of(babble, None));

    let Some(target) = spec.target_sti else {
        let out = AudioBuffer::silence(len, fs)?;
        let manifest = StimulusManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            condition_id: spec.condition_id(),
            control: true,
            spec: *spec,
            config: config.clone(),
            babble_gain: 0.0,
            level_gain: 0.0,
            achieved_sti: None,
            achieved_level_db: None,
            calibration: None,
            speech_source,
            babble_source,
            processing_chain: vec![format!("silence: {len} zero samples at {fs} Hz")],
            output: output_ref(&out),
        };
        return Ok((out, manifest));
    };

    let mut chain = Vec::new();
    let mut speech_rng = substream(spec.seed, 1);
    let mut babble_rng = substream(spec.seed, 2);
    let speech_raw =
        AudioBuffer::new(assemble(speech, len, &config.looping, &mut speech_rng)?, fs)?;
    let babble_raw =
        AudioBuffer::new(assemble(babble, len, &config.looping, &mut babble_rng)?, fs)?;
    chain.push(format!(
        "assemble: {len} samples per source (segments {} s, crossfade {} s, looping {})",
        config.looping.segment_s, config.looping.crossfade_s, config.looping.enabled
    ));

    let speech_shaped = apply_ltass(&speech_raw, &config.profile, &config.shaping)?;
    let babble_shaped = apply_ltass(&babble_raw, &config.profile, &config.shaping)?;
    chain.push(format!(
        "ltass: {} profile bands, frame {}",
        config.profile.bands().len(),
        config.shaping.frame_len
    ));

    let speech_n = normalize_rms(&speech_shaped, config.reference_rms)?;
    let babble_n = normalize_rms(&babble_shaped, config.reference_rms)?;
    chain.push(format!("normalize: both to RMS {}", config.reference_rms));

    let speech_levels = band_levels(&speech_n)?;
    let babble_levels = band_levels(&babble_n)?;
    let calibration = calibrate_from_levels(
        &speech_levels,
        &babble_levels,
        target,
        spec.sti_tolerance,
        &config.weights,
    )?;
    let achieved = sti_from_band_levels(
        &speech_levels,
        &babble_levels.offset(calibration.gain_db),
        &config.weights,
    )?
    .sti;
    chain.push(format!(
        "calibrate: babble gain {:.6} dB after {} bisections, STI {achieved:.5}",
        calibration.gain_db, calibration.iterations
    ));

    let mixture = speech_n.mix(&babble_n, calibration.gain)?;
    let measured = match a_weighted_level(&mixture, config.calibration_offset_db)? {
        SoundLevel::Db(v) => v,
        SoundLevel::BelowFloor => {
            return Err(StimulusError::InsufficientMaterial(
                "mixture is silent".into(),
            ))
        }
    };
    let level_gain = 10f64.powf((spec.presentation_level_db - measured) / 20.0);
    let out = mixture.scaled(level_gain);
    chain.push(format!(
        "level: {:.2} dB(A) at offset {} dB, gain {level_gain:.6}",
        spec.presentation_level_db, config.calibration_offset_db
    ));
    let peak = out.peak();
    if peak > 1.0 {
        return Err(StimulusError::Clipping { peak });
    }

    let manifest = StimulusManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        condition_id: spec.condition_id(),
        control: false,
        spec: *spec,
        config: config.clone(),
        babble_gain: calibration.gain,
        level_gain,
        achieved_sti: Some(achieved),
        achieved_level_db: Some(spec.presentation_level_db),
        calibration: Some(calibration),
        speech_source,
        babble_source,
        processing_chain: chain,
        output: output_ref(&out),
    };
    Ok((out, manifest))
}

fn output_ref(buffer: &AudioBuffer) -> OutputRef {
    OutputRef {
        samples: buffer.len(),
        sample_rate: buffer.sample_rate(),
        sha256: buffer.checksum(),
    }
}

/// Re-run a manifest's recipe on the same sources and check the output is bit-identical.
pub fn rebuild_from_manifest(
    manifest: &StimulusManifest,
    speech: &AudioBuffer,
    babble: &AudioBuffer,
) -> Result<AudioBuffer, StimulusError> {
    for (which, expected, buffer) in [
        ("speech", &manifest.speech_source, speech),
        ("babble", &manifest.babble_source, babble),
    ] {
        if let Some(expected) = expected {
            let found = buffer.checksum();
            if found != expected.sha256 {
                return Err(StimulusError::SourceMismatch {
                    which,
                    expected: expected.sha256.clone(),
                    found,
                });
            }
        }
    }
    let (out, _) = build_condition(speech, babble, &manifest.spec, &manifest.config)?;
    let found = out.checksum();
    if found != manifest.output.sha256 {
        return Err(StimulusError::OutputMismatch {
            expected: manifest.output.sha256.clone(),
            found,
        });
    }
    Ok(out)
}
