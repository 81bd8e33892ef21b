use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::record::{EventEnvelope, SessionRecord};
use crate::LabError;

const EVENTS_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

/// Append-only event log plus derived snapshot for one session directory.
#[derive(Debug)]
pub struct SessionLog {
    dir: PathBuf,
    file: File,
    next_seq: u64,
}

impl SessionLog {
    /// Start a new log. Fails if the directory already exists.
    pub fn create(dir: impl AsRef<Path>) -> Result<Self, LabError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir(&dir).map_err(LabError::io(&dir))?;
        let path = dir.join(EVENTS_FILE);
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&path)
            .map_err(LabError::io(&path))?;
        Ok(Self {
            dir,
            file,
            next_seq: 0,
        })
    }

    /// Open an existing log, dropping a partially written trailing line.
    pub fn open(dir: impl AsRef<Path>) -> Result<(Self, Vec<EventEnvelope>), LabError> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(EVENTS_FILE);
        let bytes = std::fs::read(&path).map_err(LabError::io(&path))?;
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            let f = OpenOptions::new()
                .write(true)
                .open(&path)
                .map_err(LabError::io(&path))?;
            f.set_len(complete as u64).map_err(LabError::io(&path))?;
            f.sync_all().map_err(LabError::io(&path))?;
        }
        let events = parse_events(&bytes[..complete], &path)?;
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(LabError::io(&path))?;
        let next_seq = events.last().map_or(0, |e| e.seq + 1);
        Ok((
            Self {
                dir,
                file,
                next_seq,
            },
            events,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Write one event and flush it to stable storage before returning.
    pub fn append(&mut self, envelope: &EventEnvelope) -> Result<(), LabError> {
        let path = self.dir.join(EVENTS_FILE);
        let mut line = serde_json::to_vec(envelope)?;
        line.push(b'\n');
        self.file.write_all(&line).map_err(LabError::io(&path))?;
        self.file.sync_data().map_err(LabError::io(&path))?;
        self.next_seq = envelope.seq + 1;
        Ok(())
    }

    /// Replace `snapshot.json` atomically.
    pub fn write_snapshot(&self, record: &SessionRecord) -> Result<(), LabError> {
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join("snapshot.json.tmp");
        let body = snapshot_bytes(record)?;
        {
            let mut f = File::create(&tmp).map_err(LabError::io(&tmp))?;
            f.write_all(&body).map_err(LabError::io(&tmp))?;
            f.sync_all().map_err(LabError::io(&tmp))?;
        }
        std::fs::rename(&tmp, &path).map_err(LabError::io(&path))?;
        Ok(())
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join(SNAPSHOT_FILE)
    }
}

/// Canonical serialized form of a session snapshot.
pub fn snapshot_bytes(record: &SessionRecord) -> Result<Vec<u8>, LabError> {
    let mut body = serde_json::to_vec_pretty(record)?;
    body.push(b'\n');
    Ok(body)
}

fn parse_events(bytes: &[u8], path: &Path) -> Result<Vec<EventEnvelope>, LabError> {
    let mut out: Vec<EventEnvelope> = Vec::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        let env: EventEnvelope = serde_json::from_slice(line).map_err(|e| LabError::Corrupt {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let expected = out.last().map_or(0, |e| e.seq + 1);
        if env.seq != expected {
            return Err(LabError::Corrupt {
                path: path.display().to_string(),
                line: i + 1,
                message: format!("sequence {} where {expected} was expected", env.seq),
            });
        }
        out.push(env);
    }
    Ok(out)
}

/// Read every complete event from a log file. A truncated final line is ignored.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<EventEnvelope>, LabError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(LabError::io(path))?;
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    parse_events(&bytes[..complete], path)
}

/// Fold an event sequence into session state.
pub fn replay(events: &[EventEnvelope]) -> Result<SessionRecord, LabError> {
    let (first, rest) = events
        .split_first()
        .ok_or_else(|| LabError::Malformed("empty event log".into()))?;
    let mut record = SessionRecord::from_created(first)?;
    for e in rest {
        record.apply(e)?;
    }
    Ok(record)
}
