use serde::{Deserialize, Serialize};

use super::ProtocolError;

pub const INITIAL_SPAN_LENGTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanOutcome {
    pub length: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Span {
    Length(usize),
    /// The task ended before any list was recalled correctly.
    NoCorrectList,
}

/// Span task state. Lists start at two words and grow by one every two lists;
/// the task stops once the two most recently presented lists were both wrong.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanState {
    pub current_length: usize,
    /// Lists already presented at `current_length` (0 or 1).
    pub lists_at_length: u8,
    pub outcome_history: Vec<SpanOutcome>,
    pub finished: bool,
    pub span: Option<Span>,
}

impl Default for SpanState {
    fn default() -> Self {
        Self::new()
    }
}

impl SpanState {
    pub fn new() -> Self {
        Self {
            current_length: INITIAL_SPAN_LENGTH,
            lists_at_length: 0,
            outcome_history: Vec::new(),
            finished: false,
            span: None,
        }
    }

    /// Fold a sequence of outcomes from the initial state.
    pub fn replay(outcomes: impl IntoIterator<Item = bool>) -> Result<Self, ProtocolError> {
        outcomes
            .into_iter()
            .try_fold(Self::new(), |s, c| advance_span(&s, c))
    }
}

pub fn advance_span(state: &SpanState, correct: bool) -> Result<SpanState, ProtocolError> {
    if state.finished {
        return Err(ProtocolError::SpanFinished);
    }
    let mut next = state.clone();
    next.outcome_history.push(SpanOutcome {
        length: state.current_length,
        correct,
    });
    let h = &next.outcome_history;
    if h.len() >= 2 && !h[h.len() - 1].correct && !h[h.len() - 2].correct {
        next.finished = true;
        next.span = Some(
            h.iter()
                .rev()
                .find(|o| o.correct)
                .map_or(Span::NoCorrectList, |o| Span::Length(o.length)),
        );
        return Ok(next);
    }
    if next.lists_at_length == 1 {
        next.lists_at_length = 0;
        next.current_length += 1;
    } else {
        next.lists_at_length = 1;
    }
    Ok(next)
}
