use std::collections::BTreeMap;

use ise_core::protocol::{
    advance_span, build_session_plan, score_instrument, score_trial, InstrumentDefinition, Load,
    OrderMode, SessionPlan, Span, SpanState, WordPool, LISTS_PER_CONDITION,
};
use ise_core::rng::substream;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{LabError, SCHEMA_VERSION};

/// Colour names used for the Stroop trials.
pub const STROOP_COLORS: [&str; 4] = ["rouge", "vert", "bleu", "jaune"];

const SPAN_STREAM: u64 = 0x5350_0000;
const STROOP_STREAM: u64 = 0x5354_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub age: Option<f64>,
    pub consent: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Created,
    Preliminary,
    Main,
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub stroop_trials: usize,
    pub order_mode: OrderMode,
    pub rest_between_conditions: bool,
    pub word_pool: Vec<String>,
}

/// Upper bound on Stroop trials per session.
pub const MAX_STROOP_TRIALS: usize = 500;

impl SessionConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        WordPool::new(self.word_pool.clone())?;
        if self.stroop_trials > MAX_STROOP_TRIALS {
            return Err(LabError::Malformed(format!(
                "{} Stroop trials exceeds {MAX_STROOP_TRIALS}",
                self.stroop_trials
            )));
        }
        Ok(())
    }
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            stroop_trials: 24,
            order_mode: OrderMode::Random,
            rest_between_conditions: true,
            word_pool: WordPool::default_pool().words().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStimulus {
    pub condition_id: String,
    pub sti: Option<f64>,
    pub wav_sha256: String,
    pub duration_s: f64,
}

/// Where the session is in the running order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Span,
    Stroop {
        index: usize,
    },
    Instrument {
        instrument: String,
        block: Option<usize>,
    },
    Recall {
        block: usize,
        trial: usize,
    },
    Rest {
        block: usize,
    },
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientTiming {
    pub onset_ms: Option<f64>,
    pub first_key_ms: Option<f64>,
    pub submit_ms: Option<f64>,
}

/// Client submission for the current step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepPayload {
    SpanTrial {
        recalled: Vec<String>,
    },
    StroopTrial {
        response: String,
        /// Client-measured response time.
        rt_ms: f64,
    },
    Instrument {
        values: BTreeMap<String, f64>,
    },
    RecallTrial {
        recalled: Vec<String>,
        #[serde(default)]
        client_timing: Option<ClientTiming>,
    },
    Rest {},
}

impl StepPayload {
    fn kind(&self) -> &'static str {
        match self {
            StepPayload::SpanTrial { .. } => "span-trial",
            StepPayload::StroopTrial { .. } => "stroop-trial",
            StepPayload::Instrument { .. } => "instrument",
            StepPayload::RecallTrial { .. } => "recall-trial",
            StepPayload::Rest {} => "rest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        participant: Participant,
        seed: u64,
        config: SessionConfig,
        stimuli: Vec<ConditionStimulus>,
    },
    StepSubmitted {
        step_id: u64,
        payload: StepPayload,
    },
    Aborted {
        reason: String,
    },
}

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub schema_version: u32,
    pub seq: u64,
    pub timestamp_ms: u64,
    pub event: SessionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAck {
    pub schema_version: u32,
    pub session_id: String,
    pub step_id: u64,
    pub next_step_id: u64,
    pub status: SessionStatus,
    pub server_timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanTrialRecord {
    pub step_id: u64,
    pub length: usize,
    pub presented: Vec<String>,
    pub recalled: Vec<String>,
    pub correct: bool,
    pub submitted_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StroopRecord {
    pub step_id: u64,
    pub word: String,
    pub ink: String,
    pub congruent: bool,
    pub response: String,
    pub correct: bool,
    pub rt_ms: f64,
    pub client_measured: bool,
    pub submitted_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentRecord {
    pub step_id: u64,
    pub instrument: String,
    pub block: Option<usize>,
    pub values: BTreeMap<String, f64>,
    pub scores: BTreeMap<String, f64>,
    pub submitted_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub step_id: u64,
    pub block: usize,
    pub condition: String,
    pub load: Load,
    pub presented: Vec<String>,
    pub recalled: Vec<String>,
    pub per_position_correct: Vec<bool>,
    pub score: f64,
    pub presented_at_ms: u64,
    pub submitted_at_ms: u64,
    pub client_timing: Option<ClientTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestRecord {
    pub step_id: u64,
    pub after_block: usize,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub step_id: Option<u64>,
    pub event: String,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub key: String,
    pub prompt: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusRef {
    pub condition: String,
    pub url: String,
    /// Seconds into the condition signal at which playback should be.
    pub playback_offset_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepKind {
    SpanTrial {
        length: usize,
        words: Vec<String>,
    },
    StroopTrial {
        index: usize,
        word: String,
        ink: String,
        choices: Vec<String>,
    },
    Instrument {
        instrument: String,
        title: String,
        block: Option<usize>,
        items: Vec<ItemView>,
    },
    RecallTrial {
        block: usize,
        trial: usize,
        condition: String,
        words: Vec<String>,
        stimulus: StimulusRef,
    },
    Rest {
        completed_block: usize,
        next_condition: String,
    },
}

/// What the client should do next. Carries no answer keys beyond the words it must show.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDescriptor {
    pub schema_version: u32,
    pub session_id: String,
    pub step_id: u64,
    pub status: SessionStatus,
    #[serde(flatten)]
    pub step: StepKind,
}

/// Full session state, derived by folding the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub schema_version: u32,
    pub session_id: String,
    pub participant: Participant,
    pub seed: u64,
    pub config: SessionConfig,
    pub stimuli: Vec<ConditionStimulus>,
    pub created_at_ms: u64,
    pub status: SessionStatus,
    pub stage: Stage,
    /// Id of the step the client must answer next.
    pub next_step_id: u64,
    pub stage_entered_at_ms: u64,
    pub span: SpanState,
    pub span_trials: Vec<SpanTrialRecord>,
    pub plan: Option<SessionPlan>,
    pub stroop: Vec<StroopRecord>,
    pub instruments: Vec<InstrumentRecord>,
    pub trials: Vec<TrialResult>,
    pub rests: Vec<RestRecord>,
    pub block_started_at_ms: Vec<u64>,
    pub audit: Vec<AuditEntry>,
    pub last_ack: Option<StepAck>,
    pub abort_reason: Option<String>,
    pub events_applied: u64,
}

pub(crate) enum Admission {
    /// Already acknowledged: hand back the stored ack.
    Replay(StepAck),
    New,
}

impl SessionRecord {
    /// Initial state from a `Created` event.
    pub fn from_created(envelope: &EventEnvelope) -> Result<Self, LabError> {
        let SessionEvent::Created {
            session_id,
            participant,
            seed,
            config,
            stimuli,
        } = &envelope.event
        else {
            return Err(LabError::Malformed(
                "event log must start with a created event".into(),
            ));
        };
        config.validate()?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            session_id: session_id.clone(),
            participant: participant.clone(),
            seed: *seed,
            config: config.clone(),
            stimuli: stimuli.clone(),
            created_at_ms: envelope.timestamp_ms,
            status: SessionStatus::Created,
            stage: Stage::Span,
            next_step_id: 0,
            stage_entered_at_ms: envelope.timestamp_ms,
            span: SpanState::new(),
            span_trials: Vec::new(),
            plan: None,
            stroop: Vec::new(),
            instruments: Vec::new(),
            trials: Vec::new(),
            rests: Vec::new(),
            block_started_at_ms: Vec::new(),
            audit: vec![AuditEntry {
                seq: envelope.seq,
                step_id: None,
                event: "created".into(),
                timestamp_ms: envelope.timestamp_ms,
            }],
            last_ack: None,
            abort_reason: None,
            events_applied: 1,
        })
    }

    pub fn is_closed(&self) -> bool {
        matches!(
            self.status,
            SessionStatus::Complete | SessionStatus::Aborted
        )
    }

    fn pool(&self) -> WordPool {
        WordPool::new(self.config.word_pool.clone()).expect("pool validated at creation")
    }

    fn span_words(&self, step_id: u64) -> Vec<String> {
        let pool = self.pool();
        let len = self.span.current_length.min(pool.len());
        pool.draw(len, &mut substream(self.seed, SPAN_STREAM + step_id))
            .expect("length capped at pool size")
    }

    /// (word, ink, congruent) for each Stroop trial.
    pub fn stroop_trials(&self) -> Vec<(String, String, bool)> {
        let n = self.config.stroop_trials;
        let mut rng = substream(self.seed, STROOP_STREAM);
        let mut congruent: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        congruent.shuffle(&mut rng);
        congruent
            .into_iter()
            .map(|c| {
                let w = rng.random_range(0..STROOP_COLORS.len());
                let ink = if c {
                    w
                } else {
                    (w + rng.random_range(1..STROOP_COLORS.len())) % STROOP_COLORS.len()
                };
                (
                    STROOP_COLORS[w].to_string(),
                    STROOP_COLORS[ink].to_string(),
                    c,
                )
            })
            .collect()
    }

    pub fn condition_of_block(&self, block: usize) -> Option<&str> {
        self.plan
            .as_ref()?
            .blocks
            .get(block)
            .map(|b| b.condition.id.as_str())
    }

    /// Block whose audio is playing: the current recall block, or the block just
    /// finished while its questionnaires are open.
    pub fn current_block(&self) -> Option<usize> {
        match &self.stage {
            Stage::Recall { block, .. } => Some(*block),
            Stage::Instrument {
                block: Some(block), ..
            } => Some(*block),
            _ => None,
        }
    }

    fn stimulus(&self, condition: &str) -> Option<&ConditionStimulus> {
        self.stimuli.iter().find(|s| s.condition_id == condition)
    }

    pub fn descriptor(&self) -> Result<StepDescriptor, LabError> {
        if self.is_closed() {
            return Err(LabError::SessionClosed(self.status));
        }
        let step = match &self.stage {
            Stage::Span => StepKind::SpanTrial {
                length: self.span.current_length,
                words: self.span_words(self.next_step_id),
            },
            Stage::Stroop { index } => {
                let (word, ink, _) = self.stroop_trials().swap_remove(*index);
                StepKind::StroopTrial {
                    index: *index,
                    word,
                    ink,
                    choices: STROOP_COLORS.iter().map(|c| c.to_string()).collect(),
                }
            }
            Stage::Instrument { instrument, block } => {
                let def = InstrumentDefinition::builtin(instrument)
                    .ok_or_else(|| LabError::Malformed(format!("no instrument {instrument:?}")))?;
                StepKind::Instrument {
                    instrument: def.id.clone(),
                    title: def.title.clone(),
                    block: *block,
                    items: def
                        .items
                        .iter()
                        .map(|i| ItemView {
                            key: i.key.clone(),
                            prompt: i.prompt.clone(),
                            min: i.min,
                            max: i.max,
                        })
                        .collect(),
                }
            }
            Stage::Recall { block, trial } => {
                let plan = self.plan.as_ref().expect("plan exists in main phase");
                let b = &plan.blocks[*block];
                let start = self.block_started_at_ms[*block];
                let duration = self.stimulus(&b.condition.id).map_or(0.0, |s| s.duration_s);
                let mut offset = (self.stage_entered_at_ms.saturating_sub(start)) as f64 / 1000.0;
                if duration > 0.0 {
                    offset %= duration;
                }
                StepKind::RecallTrial {
                    block: *block,
                    trial: *trial,
                    condition: b.condition.id.clone(),
                    words: b.trials[*trial].words.clone(),
                    stimulus: StimulusRef {
                        condition: b.condition.id.clone(),
                        url: format!("/sessions/{}/stimuli/{}", self.session_id, b.condition.id),
                        playback_offset_s: offset,
                    },
                }
            }
            Stage::Rest { block } => StepKind::Rest {
                completed_block: *block,
                next_condition: self
                    .condition_of_block(block + 1)
                    .unwrap_or_default()
                    .to_string(),
            },
            Stage::Done => return Err(LabError::SessionClosed(self.status)),
        };
        Ok(StepDescriptor {
            schema_version: SCHEMA_VERSION,
            session_id: self.session_id.clone(),
            step_id: self.next_step_id,
            status: self.status,
            step,
        })
    }

    /// Decide whether a submission is new, a duplicate of the last ack, or rejected.
    pub(crate) fn admit(&self, step_id: u64, payload: &StepPayload) -> Result<Admission, LabError> {
        if let Some(ack) = &self.last_ack {
            if ack.step_id == step_id {
                return Ok(Admission::Replay(ack.clone()));
            }
        }
        self.validate(step_id, payload)?;
        Ok(Admission::New)
    }

    /// Check that `payload` answers step `step_id` in the current stage.
    fn validate(&self, step_id: u64, payload: &StepPayload) -> Result<(), LabError> {
        if self.is_closed() {
            return Err(LabError::SessionClosed(self.status));
        }
        if step_id != self.next_step_id {
            return Err(LabError::OutOfOrder {
                expected: self.next_step_id,
                got: step_id,
            });
        }
        let expected = match &self.stage {
            Stage::Span => "span-trial",
            Stage::Stroop { .. } => "stroop-trial",
            Stage::Instrument { .. } => "instrument",
            Stage::Recall { .. } => "recall-trial",
            Stage::Rest { .. } => "rest",
            Stage::Done => return Err(LabError::SessionClosed(self.status)),
        };
        if payload.kind() != expected {
            return Err(LabError::Malformed(format!(
                "step {step_id} expects a {expected} payload, got {}",
                payload.kind()
            )));
        }
        match (payload, &self.stage) {
            (StepPayload::StroopTrial { response, rt_ms }, _) => {
                if !STROOP_COLORS.contains(&response.as_str()) {
                    return Err(LabError::Malformed(format!("unknown colour {response:?}")));
                }
                if !(rt_ms.is_finite() && *rt_ms >= 0.0) {
                    return Err(LabError::Malformed(format!(
                        "invalid response time {rt_ms}"
                    )));
                }
            }
            (StepPayload::Instrument { values }, Stage::Instrument { instrument, .. }) => {
                let def = InstrumentDefinition::builtin(instrument)
                    .ok_or_else(|| LabError::Malformed(format!("no instrument {instrument:?}")))?;
                score_instrument(
                    &def,
                    &ise_core::protocol::InstrumentResponse {
                        instrument: instrument.clone(),
                        values: values.clone(),
                    },
                )?;
            }
            (
                StepPayload::SpanTrial { recalled } | StepPayload::RecallTrial { recalled, .. },
                _,
            ) if recalled.len() > 64 => {
                return Err(LabError::Malformed("too many recalled words".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Apply one event. The service validates before writing, so a log it produced
    /// always replays; hand-edited logs are checked by the same rules.
    pub fn apply(&mut self, envelope: &EventEnvelope) -> Result<(), LabError> {
        let t = envelope.timestamp_ms;
        match &envelope.event {
            SessionEvent::Created { .. } => {
                return Err(LabError::Malformed("duplicate created event".into()));
            }
            SessionEvent::StepSubmitted { step_id, payload } => self.validate(*step_id, payload)?,
            SessionEvent::Aborted { .. } if self.is_closed() => {
                return Err(LabError::SessionClosed(self.status));
            }
            SessionEvent::Aborted { .. } => {}
        }
        self.events_applied += 1;
        match &envelope.event {
            SessionEvent::Created { .. } => unreachable!("rejected above"),
            SessionEvent::Aborted { reason } => {
                self.status = SessionStatus::Aborted;
                self.abort_reason = Some(reason.clone());
                self.stage = Stage::Done;
                self.audit.push(AuditEntry {
                    seq: envelope.seq,
                    step_id: None,
                    event: "aborted".into(),
                    timestamp_ms: t,
                });
            }
            SessionEvent::StepSubmitted { step_id, payload } => {
                self.apply_step(*step_id, payload, t)?;
                self.audit.push(AuditEntry {
                    seq: envelope.seq,
                    step_id: Some(*step_id),
                    event: payload.kind().to_string(),
                    timestamp_ms: t,
                });
                self.next_step_id = step_id + 1;
                self.stage_entered_at_ms = t;
                self.last_ack = Some(StepAck {
                    schema_version: SCHEMA_VERSION,
                    session_id: self.session_id.clone(),
                    step_id: *step_id,
                    next_step_id: self.next_step_id,
                    status: self.status,
                    server_timestamp_ms: t,
                });
            }
        }
        Ok(())
    }

    fn apply_step(&mut self, step_id: u64, payload: &StepPayload, t: u64) -> Result<(), LabError> {
        if self.status == SessionStatus::Created {
            self.status = SessionStatus::Preliminary;
        }
        let mismatch =
            || LabError::Malformed(format!("payload {} does not fit the stage", payload.kind()));
        let next = match (&self.stage, payload) {
            (Stage::Span, StepPayload::SpanTrial { recalled }) => {
                let presented = self.span_words(step_id);
                let correct = score_trial(&presented, recalled).score == 1.0;
                let length = self.span.current_length;
                self.span = advance_span(&self.span, correct)?;
                self.span_trials.push(SpanTrialRecord {
                    step_id,
                    length,
                    presented,
                    recalled: recalled.clone(),
                    correct,
                    submitted_at_ms: t,
                });
                match self.span.span {
                    None => Stage::Span,
                    Some(Span::NoCorrectList) => {
                        self.status = SessionStatus::Aborted;
                        self.abort_reason = Some("no span list recalled correctly".into());
                        Stage::Done
                    }
                    Some(span @ Span::Length(_)) => {
                        self.plan = Some(build_session_plan(
                            &self.participant.id,
                            span,
                            &self.pool(),
                            self.seed,
                            self.config.order_mode,
                        )?);
                        self.after_span()
                    }
                }
            }
            (Stage::Stroop { index }, StepPayload::StroopTrial { response, rt_ms }) => {
                let index = *index;
                let (word, ink, congruent) = self.stroop_trials().swap_remove(index);
                self.stroop.push(StroopRecord {
                    step_id,
                    correct: *response == ink,
                    word,
                    ink,
                    congruent,
                    response: response.clone(),
                    rt_ms: *rt_ms,
                    client_measured: true,
                    submitted_at_ms: t,
                });
                if index + 1 < self.config.stroop_trials {
                    Stage::Stroop { index: index + 1 }
                } else {
                    instrument("levenson", None)
                }
            }
            (
                Stage::Instrument {
                    instrument: id,
                    block,
                },
                StepPayload::Instrument { values },
            ) => {
                let (id, block) = (id.clone(), *block);
                let def = InstrumentDefinition::builtin(&id).ok_or_else(mismatch)?;
                let scores = score_instrument(
                    &def,
                    &ise_core::protocol::InstrumentResponse {
                        instrument: id.clone(),
                        values: values.clone(),
                    },
                )?;
                self.instruments.push(InstrumentRecord {
                    step_id,
                    instrument: id.clone(),
                    block,
                    values: values.clone(),
                    scores,
                    submitted_at_ms: t,
                });
                match (id.as_str(), block) {
                    ("levenson", None) => instrument("thayer", None),
                    ("thayer", None) => self.enter_block(0, t),
                    ("rtlx", Some(b)) => instrument("annoyance", Some(b)),
                    ("annoyance", Some(b)) => instrument("thayer", Some(b)),
                    ("thayer", Some(b)) => {
                        if b + 1 >= self.block_count() {
                            self.status = SessionStatus::Complete;
                            Stage::Done
                        } else if self.config.rest_between_conditions {
                            Stage::Rest { block: b }
                        } else {
                            self.enter_block(b + 1, t)
                        }
                    }
                    _ => return Err(mismatch()),
                }
            }
            (
                Stage::Recall { block, trial },
                StepPayload::RecallTrial {
                    recalled,
                    client_timing,
                },
            ) => {
                let (block, trial) = (*block, *trial);
                let plan = self.plan.as_ref().ok_or_else(mismatch)?;
                let b = &plan.blocks[block];
                let planned = &b.trials[trial];
                let scored = score_trial(&planned.words, recalled);
                self.trials.push(TrialResult {
                    step_id,
                    block,
                    condition: b.condition.id.clone(),
                    load: planned.load,
                    presented: planned.words.clone(),
                    recalled: recalled.clone(),
                    per_position_correct: scored.per_position_correct,
                    score: scored.score,
                    presented_at_ms: self.stage_entered_at_ms,
                    submitted_at_ms: t,
                    client_timing: client_timing.clone(),
                });
                if trial + 1 < LISTS_PER_CONDITION {
                    Stage::Recall {
                        block,
                        trial: trial + 1,
                    }
                } else {
                    instrument("rtlx", Some(block))
                }
            }
            (Stage::Rest { block }, StepPayload::Rest {}) => {
                let block = *block;
                self.rests.push(RestRecord {
                    step_id,
                    after_block: block,
                    duration_ms: t.saturating_sub(self.stage_entered_at_ms),
                });
                self.enter_block(block + 1, t)
            }
            _ => return Err(mismatch()),
        };
        self.stage = next;
        Ok(())
    }

    fn after_span(&self) -> Stage {
        if self.config.stroop_trials > 0 {
            Stage::Stroop { index: 0 }
        } else {
            instrument("levenson", None)
        }
    }

    fn block_count(&self) -> usize {
        self.plan.as_ref().map_or(0, |p| p.blocks.len())
    }

    fn enter_block(&mut self, block: usize, t: u64) -> Stage {
        self.status = SessionStatus::Main;
        self.block_started_at_ms.push(t);
        Stage::Recall { block, trial: 0 }
    }
}

fn instrument(id: &str, block: Option<usize>) -> Stage {
    Stage::Instrument {
        instrument: id.to_string(),
        block,
    }
}
