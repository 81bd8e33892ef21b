//! Session protocol: span measurement, condition plans, recall and questionnaire scoring.

mod instrument;
mod plan;
mod scoring;
mod span;

pub use instrument::{
    score_instrument, score_rtlx, Aggregation, InstrumentDefinition, InstrumentResponse, Item,
    Subscale, BUILTIN_INSTRUMENTS,
};
pub use plan::{
    build_session_plan, standard_conditions, williams_square, Condition, ConditionBlock, Load,
    OrderMode, PlannedTrial, QuestionnaireSlot, SessionPlan, WordPool, LISTS_PER_CONDITION,
    PLAN_SCHEMA_VERSION,
};
pub use scoring::{normalize_word, score_trial, stroop_interference, StroopFilter, TrialScore};
pub use span::{advance_span, Span, SpanOutcome, SpanState, INITIAL_SPAN_LENGTH};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("span task already finished")]
    SpanFinished,
    #[error("no list was recalled correctly; participant cannot enter the main phase")]
    NoSpan,
    #[error("span {0} too small: need at least 2")]
    SpanTooSmall(usize),
    #[error("word pool too small: {needed} distinct words needed, {available} available")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("duplicate word {0:?} in pool")]
    DuplicateWord(String),
    #[error("invalid instrument definition: {0}")]
    InvalidInstrument(String),
    #[error("response for instrument {found:?} scored against {expected:?}")]
    WrongInstrument { expected: String, found: String },
    #[error("missing item {0:?}")]
    MissingItem(String),
    #[error("unknown item {0:?}")]
    UnknownItem(String),
    #[error("item {item:?} value {value} outside scale [{min}, {max}]")]
    ScaleViolation {
        item: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("expected {expected} items, got {found}")]
    WrongItemCount { expected: usize, found: usize },
    #[error("no valid {0} trials after outlier removal")]
    EmptyClass(&'static str),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
