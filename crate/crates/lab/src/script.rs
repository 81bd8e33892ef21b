//! Seeded stand-in for a participant, used to drive sessions in tests and dry runs.

use std::collections::BTreeMap;

use ise_core::protocol::InstrumentDefinition;
use ise_core::rng::{substream, SeededRng};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::record::{StepDescriptor, StepKind, StepPayload};

/// Simulated participant: answers whatever step is shown, with seeded lapses.
#[derive(Debug, Clone)]
pub struct ScriptedParticipant {
    rng: SeededRng,
    /// Longest span list this participant can recall.
    pub span_limit: usize,
}

impl ScriptedParticipant {
    pub fn new(seed: u64) -> Self {
        let mut rng = substream(seed, 99);
        let span_limit = rng.random_range(3..8);
        Self { rng, span_limit }
    }

    pub fn answer(&mut self, step: &StepDescriptor) -> StepPayload {
        match &step.step {
            StepKind::SpanTrial { length, words } => {
                let ok = *length <= self.span_limit && self.rng.random_bool(0.85);
                let mut recalled = words.clone();
                if !ok {
                    recalled.reverse();
                    recalled.truncate(length.saturating_sub(1).max(1));
                    if recalled == *words {
                        recalled.clear();
                    }
                }
                StepPayload::SpanTrial { recalled }
            }
            StepKind::StroopTrial { ink, choices, .. } => {
                let response = if self.rng.random_bool(0.9) {
                    ink.clone()
                } else {
                    choices.choose(&mut self.rng).unwrap().clone()
                };
                StepPayload::StroopTrial {
                    response,
                    rt_ms: self.rng.random_range(400.0..1600.0),
                }
            }
            StepKind::Instrument { instrument, .. } => {
                let def = InstrumentDefinition::builtin(instrument).unwrap();
                let values: BTreeMap<String, f64> = def
                    .items
                    .iter()
                    .map(|i| {
                        let v = self.rng.random_range(i.min as i64..=i.max as i64) as f64;
                        (i.key.clone(), v)
                    })
                    .collect();
                StepPayload::Instrument { values }
            }
            StepKind::RecallTrial { words, .. } => {
                let recalled = words
                    .iter()
                    .map(|w| {
                        if self.rng.random_bool(0.7) {
                            w.clone()
                        } else {
                            String::new()
                        }
                    })
                    .collect();
                StepPayload::RecallTrial {
                    recalled,
                    client_timing: None,
                }
            }
            StepKind::Rest { .. } => StepPayload::Rest {},
        }
    }
}
