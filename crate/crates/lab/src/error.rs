use ise_core::protocol::ProtocolError;

use crate::record::SessionStatus;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} already exists for this participant and seed")]
    DuplicateSession(String),
    #[error("expected 5 conditions, found {found} (missing: {missing:?})")]
    MissingConditions { found: usize, missing: Vec<String> },
    #[error("participant consent not recorded")]
    ConsentRequired,
    #[error("out-of-order step: expected {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("session is {0:?}")]
    SessionClosed(SessionStatus),
    #[error("session is still running; export needs a complete or aborted session")]
    NotFinished,
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error("condition {requested:?} is not the current condition ({current:?})")]
    WrongCondition {
        requested: String,
        current: Option<String>,
    },
    #[error("unsatisfiable range {0:?}")]
    BadRange(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt event log {path} at line {line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
        move |source| LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Short machine-readable code for API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::UnknownSession(_) => "unknown_session",
            LabError::DuplicateSession(_) => "duplicate_session",
            LabError::MissingConditions { .. } => "missing_conditions",
            LabError::ConsentRequired => "consent_required",
            LabError::OutOfOrder { .. } => "out_of_order",
            LabError::SessionClosed(_) => "session_closed",
            LabError::NotFinished => "not_finished",
            LabError::Malformed(_) | LabError::Protocol(_) => "malformed",
            LabError::UnknownCondition(_) => "unknown_condition",
            LabError::WrongCondition { .. } => "wrong_condition",
            LabError::BadRange(_) => "bad_range",
            LabError::Io { .. } | LabError::Corrupt { .. } | LabError::Json(_) => "internal",
        }
    }
}
