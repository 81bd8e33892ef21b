//! Session service for the serial-recall protocol.
//!
//! Every session lives in its own directory as an append-only `events.jsonl` plus a
//! derived `snapshot.json`. The in-memory [`SessionRecord`] is a pure fold over the
//! events, so a restart rebuilds exactly the state that was acknowledged.

mod clock;
mod error;
mod export;
pub mod http;
mod record;
mod script;
mod service;
mod stimuli;
mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::LabError;
pub use export::{matrix_from_bundles, ConditionPerformance, ExportBundle};
pub use record::{
    AuditEntry, ClientTiming, ConditionStimulus, EventEnvelope, InstrumentRecord, ItemView,
    Participant, RestRecord, SessionConfig, SessionEvent, SessionRecord, SessionStatus,
    SpanTrialRecord, Stage, StepAck, StepDescriptor, StepKind, StepPayload, StimulusRef,
    StroopRecord, TrialResult, STROOP_COLORS,
};
pub use script::ScriptedParticipant;
pub use service::{CreateSession, LabService, SessionCreated};
pub use stimuli::{parse_range, write_condition, StimulusEntry, StimulusLibrary, StimulusSlice};
pub use store::{read_events, replay, SessionLog};

/// Version tag carried by every persisted record and every API payload.
pub const SCHEMA_VERSION: u32 = 1;
