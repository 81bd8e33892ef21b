use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::Clock;
use crate::export::ExportBundle;
use crate::record::{
    Admission, ConditionStimulus, EventEnvelope, Participant, SessionConfig, SessionEvent,
    SessionRecord, StepAck, StepDescriptor, StepPayload,
};
use crate::stimuli::{StimulusLibrary, StimulusSlice};
use crate::store::SessionLog;
use crate::{LabError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub participant_id: String,
    #[serde(default)]
    pub age: Option<f64>,
    pub consent: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub schema_version: u32,
    pub session_id: String,
    pub next: StepDescriptor,
}

struct Session {
    log: SessionLog,
    record: SessionRecord,
}

/// Owns every session under a root directory.
pub struct LabService {
    root: PathBuf,
    stimuli: StimulusLibrary,
    clock: Arc<dyn Clock>,
    config: SessionConfig,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

pub(crate) fn session_id(participant_id: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(participant_id.as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    hex::encode(&h.finalize()[..8])
}

impl LabService {
    /// Open the service, replaying every session directory found under `root`.
    pub fn open(
        root: impl AsRef<Path>,
        stimuli: StimulusLibrary,
        clock: Arc<dyn Clock>,
        config: SessionConfig,
    ) -> Result<Self, LabError> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(LabError::io(&root))?;
        config.validate()?;
        let mut sessions = HashMap::new();
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)
            .map_err(LabError::io(&root))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("events.jsonl").is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let (log, events) = SessionLog::open(&dir)?;
            if events.is_empty() {
                continue;
            }
            let record = crate::store::replay(&events)?;
            log.write_snapshot(&record)?;
            tracing::debug!(session = %record.session_id, events = events.len(), "recovered session");
            sessions.insert(
                record.session_id.clone(),
                Arc::new(Mutex::new(Session { log, record })),
            );
        }
        Ok(Self {
            root,
            stimuli,
            clock,
            config,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn stimuli(&self) -> &StimulusLibrary {
        &self.stimuli
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, LabError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| LabError::UnknownSession(id.to_string()))
    }

    pub fn create_session(&self, req: &CreateSession) -> Result<SessionCreated, LabError> {
        if !req.consent {
            return Err(LabError::ConsentRequired);
        }
        if req.participant_id.trim().is_empty() {
            return Err(LabError::Malformed("participant_id is empty".into()));
        }
        if let Some(age) = req.age {
            if !(age.is_finite() && age > 0.0) {
                return Err(LabError::Malformed(format!("invalid age {age}")));
            }
        }
        let missing = self.stimuli.missing();
        if !missing.is_empty() {
            return Err(LabError::MissingConditions {
                found: self.stimuli.len(),
                missing,
            });
        }
        let stimuli: Vec<ConditionStimulus> = ise_core::protocol::standard_conditions()
            .into_iter()
            .map(|c| {
                let e = self.stimuli.get(&c.id).expect("checked above");
                ConditionStimulus {
                    condition_id: c.id,
                    sti: c.sti,
                    wav_sha256: e.wav_sha256.clone(),
                    duration_s: e.duration_s(),
                }
            })
            .collect();
        let id = session_id(&req.participant_id, req.seed);
        let mut sessions = self.sessions.write();
        if sessions.contains_key(&id) {
            return Err(LabError::DuplicateSession(id));
        }
        let dir = self.root.join(&id);
        if dir.exists() {
            return Err(LabError::DuplicateSession(id));
        }
        let mut log = SessionLog::create(&dir)?;
        let env = EventEnvelope {
            schema_version: SCHEMA_VERSION,
            seq: 0,
            timestamp_ms: self.clock.now_ms(),
            event: SessionEvent::Created {
                session_id: id.clone(),
                participant: Participant {
                    id: req.participant_id.clone(),
                    age: req.age,
                    consent: req.consent,
                },
                seed: req.seed,
                config: self.config.clone(),
                stimuli,
            },
        };
        log.append(&env)?;
        let record = SessionRecord::from_created(&env)?;
        log.write_snapshot(&record)?;
        let next = record.descriptor()?;
        tracing::info!(session = %id, participant = %req.participant_id, "session created");
        sessions.insert(id.clone(), Arc::new(Mutex::new(Session { log, record })));
        Ok(SessionCreated {
            schema_version: SCHEMA_VERSION,
            session_id: id,
            next,
        })
    }

    pub fn next_step(&self, id: &str) -> Result<StepDescriptor, LabError> {
        self.session(id)?.lock().record.descriptor()
    }

    /// Validate, persist, then apply one step. Resubmitting the last acknowledged step
    /// returns the original ack without touching the log.
    pub fn submit_step(
        &self,
        id: &str,
        step_id: u64,
        payload: StepPayload,
    ) -> Result<StepAck, LabError> {
        let handle = self.session(id)?;
        let mut s = handle.lock();
        if let Admission::Replay(ack) = s.record.admit(step_id, &payload)? {
            return Ok(ack);
        }
        let env = EventEnvelope {
            schema_version: SCHEMA_VERSION,
            seq: s.log.next_seq(),
            timestamp_ms: self.clock.now_ms(),
            event: SessionEvent::StepSubmitted { step_id, payload },
        };
        let mut next = s.record.clone();
        next.apply(&env)?;
        s.log.append(&env)?;
        s.log.write_snapshot(&next)?;
        s.record = next;
        Ok(s.record.last_ack.clone().expect("set by apply"))
    }

    pub fn abort(&self, id: &str, reason: &str) -> Result<SessionRecord, LabError> {
        let handle = self.session(id)?;
        let mut s = handle.lock();
        if s.record.is_closed() {
            return Err(LabError::SessionClosed(s.record.status));
        }
        let env = EventEnvelope {
            schema_version: SCHEMA_VERSION,
            seq: s.log.next_seq(),
            timestamp_ms: self.clock.now_ms(),
            event: SessionEvent::Aborted {
                reason: reason.to_string(),
            },
        };
        let mut next = s.record.clone();
        next.apply(&env)?;
        s.log.append(&env)?;
        s.log.write_snapshot(&next)?;
        s.record = next;
        Ok(s.record.clone())
    }

    pub fn record(&self, id: &str) -> Result<SessionRecord, LabError> {
        Ok(self.session(id)?.lock().record.clone())
    }

    pub fn export_session(&self, id: &str) -> Result<ExportBundle, LabError> {
        ExportBundle::from_record(&self.session(id)?.lock().record)
    }

    /// Bytes of the condition currently being presented to this session.
    pub fn stimulus(
        &self,
        id: &str,
        condition: &str,
        range: Option<&str>,
    ) -> Result<StimulusSlice, LabError> {
        let current = {
            let handle = self.session(id)?;
            let s = handle.lock();
            if s.record.is_closed() {
                return Err(LabError::SessionClosed(s.record.status));
            }
            s.record
                .current_block()
                .and_then(|b| s.record.condition_of_block(b))
                .map(str::to_string)
        };
        if self.stimuli.get(condition).is_none() {
            return Err(LabError::UnknownCondition(condition.to_string()));
        }
        if current.as_deref() != Some(condition) {
            return Err(LabError::WrongCondition {
                requested: condition.to_string(),
                current,
            });
        }
        self.stimuli.slice(condition, range)
    }
}
