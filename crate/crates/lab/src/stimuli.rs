use std::collections::BTreeMap;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ise_core::protocol::standard_conditions;
use ise_core::signal::{encode_wav, AudioBuffer, WavEncoding};
use ise_core::stimulus::StimulusManifest;
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone)]
enum Source {
    File(PathBuf),
    Memory(Arc<Vec<u8>>),
}

/// One prebuilt condition: its manifest and the WAV rendering served to clients.
#[derive(Debug, Clone)]
pub struct StimulusEntry {
    pub manifest: StimulusManifest,
    /// SHA-256 of the WAV file bytes.
    pub wav_sha256: String,
    pub wav_len: u64,
    source: Source,
}

impl StimulusEntry {
    pub fn from_bytes(manifest: StimulusManifest, wav: Vec<u8>) -> Self {
        Self {
            manifest,
            wav_sha256: hex::encode(Sha256::digest(&wav)),
            wav_len: wav.len() as u64,
            source: Source::Memory(Arc::new(wav)),
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.manifest.spec.duration_s
    }

    fn read_range(&self, start: u64, end: u64) -> Result<Vec<u8>, LabError> {
        match &self.source {
            Source::Memory(bytes) => Ok(bytes[start as usize..end as usize].to_vec()),
            Source::File(path) => {
                let mut f = std::fs::File::open(path).map_err(LabError::io(path))?;
                f.seek(SeekFrom::Start(start)).map_err(LabError::io(path))?;
                let mut buf = vec![0; (end - start) as usize];
                f.read_exact(&mut buf).map_err(LabError::io(path))?;
                Ok(buf)
            }
        }
    }
}

/// Byte range of a condition WAV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusSlice {
    pub bytes: Vec<u8>,
    pub start: u64,
    /// Exclusive.
    pub end: u64,
    pub total: u64,
    pub partial: bool,
    /// SHA-256 of `bytes`.
    pub sha256: String,
}

/// Conditions keyed by id (`silence`, `sti_0.25`, ...).
#[derive(Debug, Clone, Default)]
pub struct StimulusLibrary {
    entries: BTreeMap<String, StimulusEntry>,
}

impl StimulusLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: StimulusEntry) {
        self.entries
            .insert(entry.manifest.condition_id.clone(), entry);
    }

    /// Load every `<condition>.json` + `<condition>.wav` pair in `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, LabError> {
        let dir = dir.as_ref();
        let mut lib = Self::new();
        for cond in standard_conditions() {
            let manifest_path = dir.join(format!("{}.json", cond.id));
            let wav_path = dir.join(format!("{}.wav", cond.id));
            if !manifest_path.exists() || !wav_path.exists() {
                continue;
            }
            let text =
                std::fs::read_to_string(&manifest_path).map_err(LabError::io(&manifest_path))?;
            let manifest: StimulusManifest = serde_json::from_str(&text)?;
            let mut file = std::fs::File::open(&wav_path).map_err(LabError::io(&wav_path))?;
            let mut hasher = Sha256::new();
            let wav_len = std::io::copy(&mut file, &mut hasher).map_err(LabError::io(&wav_path))?;
            lib.insert(StimulusEntry {
                manifest,
                wav_sha256: hex::encode(hasher.finalize()),
                wav_len,
                source: Source::File(wav_path),
            });
        }
        Ok(lib)
    }

    pub fn get(&self, condition: &str) -> Option<&StimulusEntry> {
        self.entries.get(condition)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Ids of standard conditions with no entry.
    pub fn missing(&self) -> Vec<String> {
        standard_conditions()
            .into_iter()
            .filter(|c| !self.entries.contains_key(&c.id))
            .map(|c| c.id)
            .collect()
    }

    pub fn slice(&self, condition: &str, range: Option<&str>) -> Result<StimulusSlice, LabError> {
        let entry = self
            .get(condition)
            .ok_or_else(|| LabError::UnknownCondition(condition.to_string()))?;
        let total = entry.wav_len;
        let (start, end, partial) = match range {
            None => (0, total, false),
            Some(r) => {
                let (s, e) = parse_range(r, total)?;
                (s, e, true)
            }
        };
        let bytes = entry.read_range(start, end)?;
        Ok(StimulusSlice {
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes,
            start,
            end,
            total,
            partial,
        })
    }
}

/// Parse a single `bytes=` range against a resource of `total` bytes into [start, end).
pub fn parse_range(header: &str, total: u64) -> Result<(u64, u64), LabError> {
    let bad = || LabError::BadRange(header.to_string());
    let spec = header.trim().strip_prefix("bytes=").ok_or_else(bad)?;
    if spec.contains(',') {
        return Err(bad());
    }
    let (a, b) = spec.split_once('-').ok_or_else(bad)?;
    let (a, b) = (a.trim(), b.trim());
    let (start, end) = if a.is_empty() {
        let n: u64 = b.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        (total.saturating_sub(n), total)
    } else {
        let s: u64 = a.parse().map_err(|_| bad())?;
        let e = if b.is_empty() {
            total
        } else {
            let last: u64 = b.parse().map_err(|_| bad())?;
            if last < s {
                return Err(bad());
            }
            last.saturating_add(1).min(total)
        };
        (s, e)
    };
    if start >= total || start >= end {
        return Err(bad());
    }
    Ok((start, end))
}

/// Write `<condition>.wav` (float32) and `<condition>.json` into `dir`.
pub fn write_condition(
    dir: impl AsRef<Path>,
    manifest: &StimulusManifest,
    buffer: &AudioBuffer,
) -> Result<(PathBuf, PathBuf), LabError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let wav = dir.join(format!("{}.wav", manifest.condition_id));
    let json = dir.join(format!("{}.json", manifest.condition_id));
    std::fs::write(&wav, encode_wav(buffer, WavEncoding::Float32)).map_err(LabError::io(&wav))?;
    std::fs::write(&json, serde_json::to_string_pretty(manifest)?).map_err(LabError::io(&json))?;
    Ok((wav, json))
}
