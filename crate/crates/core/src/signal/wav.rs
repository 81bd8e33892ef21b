//! Minimal RIFF/WAVE codec: PCM 16-bit and IEEE float 32-bit, mono or multichannel.
//!
//! Multichannel input is average-downmixed on decode; the original channel count is
//! kept on the buffer.

use std::path::Path;

use super::{AudioBuffer, SignalError};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Sample encoding used when writing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn corrupt() -> SignalError {
    SignalError::CorruptWav
}

fn read_u16(b: &[u8], at: usize) -> Result<u16, SignalError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(corrupt)
}

fn read_u32(b: &[u8], at: usize) -> Result<u32, SignalError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(corrupt)
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, SignalError> {
    if body.len() < 16 {
        return Err(corrupt());
    }
    let mut format = read_u16(body, 0)?;
    let channels = read_u16(body, 2)?;
    let sample_rate = read_u32(body, 4)?;
    let bits_per_sample = read_u16(body, 14)?;
    if format == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the subformat GUID whose first
        // two bytes carry the real format tag.
        if body.len() < 26 {
            return Err(corrupt());
        }
        format = read_u16(body, 24)?;
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

/// Decode a WAV byte stream into a mono buffer.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer, SignalError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(corrupt());
    }
    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        // Streaming writers may leave an oversized data length; clamp to what is present.
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                data = Some(body);
                break;
            }
            _ => {}
        }
        // Chunks are word aligned.
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let fmt = fmt.ok_or_else(corrupt)?;
    let data = data.ok_or_else(corrupt)?;
    if fmt.channels == 0 || fmt.sample_rate == 0 {
        return Err(corrupt());
    }
    let bytes_per_sample = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2usize,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (format, bits) => {
            return Err(SignalError::UnsupportedEncoding(format!(
                "format tag {format:#06x}, {bits} bits per sample"
            )))
        }
    };
    let channels = fmt.channels as usize;
    let frame_bytes = bytes_per_sample * channels;
    let frames = data.len() / frame_bytes;
    if frames == 0 {
        return Err(SignalError::EmptyPayload);
    }
    let mut samples = Vec::with_capacity(frames);
    for frame in data.chunks_exact(frame_bytes) {
        let mut acc = 0.0;
        for s in frame.chunks_exact(bytes_per_sample) {
            acc += match bytes_per_sample {
                2 => i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0,
                _ => f32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64,
            };
        }
        samples.push(acc / channels as f64);
    }
    AudioBuffer::with_source_channels(samples, fmt.sample_rate, fmt.channels)
}

/// Encode a buffer as a mono WAV file.
pub fn encode_wav(buffer: &AudioBuffer, encoding: WavEncoding) -> Vec<u8> {
    let (format, bits) = match encoding {
        WavEncoding::Pcm16 => (FORMAT_PCM, 16u16),
        WavEncoding::Float32 => (FORMAT_IEEE_FLOAT, 32u16),
    };
    let block_align = bits / 8;
    let data_len = buffer.len() * block_align as usize;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate().to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate() * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in buffer.samples() {
        match encoding {
            WavEncoding::Pcm16 => {
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            WavEncoding::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    out
}

pub fn load_wave(path: impl AsRef<Path>) -> Result<AudioBuffer, SignalError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| SignalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_wav(&bytes)
}

pub fn save_wave(
    path: impl AsRef<Path>,
    buffer: &AudioBuffer,
    encoding: WavEncoding,
) -> Result<(), SignalError> {
    let path = path.as_ref();
    std::fs::write(path, encode_wav(buffer, encoding)).map_err(|source| SignalError::Io {
        path: path.display().to_string(),
        source,
    })
}
