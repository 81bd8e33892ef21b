#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use ise_core::protocol::standard_conditions;
use ise_core::signal::{encode_wav, AudioBuffer, WavEncoding};
use ise_core::stimulus::{BuildConfig, OutputRef, StimulusManifest, StimulusSpec};
pub use ise_lab::ScriptedParticipant;
use ise_lab::{
    Clock, CreateSession, LabService, ManualClock, SessionConfig, StimulusEntry, StimulusLibrary,
};

pub const FIXTURE_FS: u32 = 8_000;
pub const FIXTURE_SECONDS: f64 = 2.0;

/// Short stand-in stimuli: a tone per condition, so checksums differ.
pub fn fixture_entry(condition: &str, sti: Option<f64>) -> StimulusEntry {
    let n = (FIXTURE_SECONDS * FIXTURE_FS as f64) as usize;
    let f = 200.0 + 100.0 * sti.unwrap_or(0.0);
    let amp = if sti.is_some() { 0.1 } else { 0.0 };
    let samples: Vec<f64> = (0..n)
        .map(|i| amp * (2.0 * std::f64::consts::PI * f * i as f64 / FIXTURE_FS as f64).sin())
        .collect();
    let buffer = AudioBuffer::new(samples, FIXTURE_FS).unwrap();
    let spec = StimulusSpec {
        target_sti: sti,
        duration_s: FIXTURE_SECONDS,
        ..StimulusSpec::control(1)
    };
    let manifest = StimulusManifest {
        schema_version: 1,
        condition_id: condition.to_string(),
        control: sti.is_none(),
        spec,
        config: BuildConfig::default(),
        babble_gain: 0.0,
        level_gain: 0.0,
        achieved_sti: sti,
        achieved_level_db: None,
        calibration: None,
        speech_source: None,
        babble_source: None,
        processing_chain: vec!["fixture".into()],
        output: OutputRef {
            samples: buffer.len(),
            sample_rate: FIXTURE_FS,
            sha256: buffer.checksum(),
        },
    };
    StimulusEntry::from_bytes(manifest, encode_wav(&buffer, WavEncoding::Pcm16))
}

pub fn fixture_library() -> StimulusLibrary {
    let mut lib = StimulusLibrary::new();
    for c in standard_conditions() {
        lib.insert(fixture_entry(&c.id, c.sti));
    }
    lib
}

pub fn test_config() -> SessionConfig {
    SessionConfig {
        stroop_trials: 8,
        ..SessionConfig::default()
    }
}

pub fn open_service(root: &Path, clock: &Arc<ManualClock>) -> LabService {
    let clock: Arc<dyn Clock> = clock.clone();
    LabService::open(root, fixture_library(), clock, test_config()).unwrap()
}

pub fn create(svc: &LabService, participant: &str, seed: u64) -> String {
    svc.create_session(&CreateSession {
        participant_id: participant.into(),
        age: Some(20.0 + (seed % 50) as f64),
        consent: true,
        seed,
    })
    .unwrap()
    .session_id
}

/// Drive a session to its end; returns the number of steps taken.
pub fn run_to_end(
    svc: &LabService,
    id: &str,
    who: &mut ScriptedParticipant,
    clock: &ManualClock,
) -> usize {
    let mut n = 0;
    while let Ok(step) = svc.next_step(id) {
        clock.advance(1_500);
        let payload = who.answer(&step);
        svc.submit_step(id, step.step_id, payload).unwrap();
        n += 1;
    }
    n
}
