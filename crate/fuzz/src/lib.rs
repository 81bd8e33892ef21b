//! Fuzz entry points. Each takes raw bytes, must never panic, and checks whatever
//! round-trip property the parsed value supports.

use ise_core::analysis::PerformanceMatrix;
use ise_core::intelligibility::StiWeights;
use ise_core::model::{simulate_cohort, CohortSpec, DpObservation, SigmoidParams};
use ise_core::protocol::{score_instrument, InstrumentDefinition, InstrumentResponse};
use ise_core::signal::{decode_wav, encode_wav, SpectrumProfile, WavEncoding};
use ise_core::stimulus::StimulusManifest;
use ise_lab::{parse_range, replay, EventEnvelope, StepPayload};

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn wav_decode(data: &[u8]) {
    if let Ok(buffer) = decode_wav(data) {
        assert!(buffer.samples().iter().all(|s| s.is_finite()));
        let again = decode_wav(&encode_wav(&buffer, WavEncoding::Float32)).expect("own output decodes");
        assert_eq!(again.len(), buffer.len());
    }
}

pub fn spectrum_profile(data: &[u8]) {
    if let Some(Ok(p)) = text(data).map(SpectrumProfile::parse) {
        for f in [63.0, 125.0, 1000.0, 8000.0, 20000.0] {
            assert!(p.level_at(f).is_finite());
        }
    }
}

pub fn sti_weights(data: &[u8]) {
    if let Some(Ok(w)) = text(data).map(StiWeights::parse) {
        let sum: f64 = w.values().iter().sum();
        assert!(sum.is_finite() && sum > 0.0);
    }
}

pub fn matrix_csv(data: &[u8]) {
    if let Ok(m) = PerformanceMatrix::read_csv(data) {
        let mut out = Vec::new();
        m.write_csv(&mut out).expect("write");
        let again = PerformanceMatrix::read_csv(out.as_slice()).expect("own output parses");
        assert_eq!(again, m);
    }
}

pub fn observations_csv(data: &[u8]) {
    if let Ok(obs) = DpObservation::read_csv(data) {
        if (3..=64).contains(&obs.len()) {
            let _ = ise_core::model::fit_sigmoid(&obs);
        }
    }
}

pub fn manifest_json(data: &[u8]) {
    if let Ok(m) = serde_json::from_slice::<StimulusManifest>(data) {
        let json = serde_json::to_vec(&m).expect("serialize");
        let again: StimulusManifest = serde_json::from_slice(&json).expect("round trip");
        assert_eq!(serde_json::to_vec(&again).unwrap(), json);
    }
}

pub fn instrument_definition(data: &[u8]) {
    if let Some(Ok(def)) = text(data).map(InstrumentDefinition::from_json) {
        let values = def.items.iter().map(|i| (i.key.clone(), i.min)).collect();
        let response = InstrumentResponse {
            instrument: def.id.clone(),
            values,
        };
        score_instrument(&def, &response).expect("minimum ratings are valid");
    }
}

pub fn session_event_log(data: &[u8]) {
    let events: Vec<EventEnvelope> = data
        .split(|&b| b == b'\n')
        .filter_map(|line| serde_json::from_slice(line).ok())
        .take(2_000)
        .collect();
    if let Ok(record) = replay(&events) {
        if !record.is_closed() {
            let _ = record.descriptor();
        }
        let _ = ise_lab::ExportBundle::from_record(&record);
    }
}

pub fn step_payload(data: &[u8]) {
    if let Ok(p) = serde_json::from_slice::<StepPayload>(data) {
        let json = serde_json::to_vec(&p).expect("serialize");
        let again: StepPayload = serde_json::from_slice(&json).expect("round trip");
        assert_eq!(again, p);
    }
}

pub fn cohort_spec(data: &[u8]) {
    if let Ok(spec) = serde_json::from_slice::<CohortSpec>(data) {
        // Keep the simulation small; the spec itself may ask for anything.
        if spec.n_subjects <= 200 && spec.condition_stis.len() <= 16 {
            let _ = simulate_cohort(&spec, &SigmoidParams::default());
        }
    }
}

pub fn byte_range(data: &[u8]) {
    if data.len() < 8 {
        return;
    }
    let total = u64::from_le_bytes(data[..8].try_into().unwrap()) % (1 << 40);
    if let Some(header) = text(&data[8..]) {
        if let Ok((start, end)) = parse_range(header, total) {
            assert!(start < end && end <= total);
        }
    }
}
