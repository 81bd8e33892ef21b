use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SignalError;

/// Mono sampled signal. Samples are nominally within ±1.0 full scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
    /// Channel count of the file this buffer was decoded from (1 for synthetic buffers).
    source_channels: u16,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        Self::with_source_channels(samples, sample_rate, 1)
    }

    pub(crate) fn with_source_channels(
        samples: Vec<f64>,
        sample_rate: u32,
        source_channels: u16,
    ) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::InvalidSampleRate(sample_rate));
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
            source_channels,
        })
    }

    /// Buffer of `len` zero samples.
    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, SignalError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// Build a buffer by evaluating `f` at each sample time (seconds).
    pub fn from_fn(
        len: usize,
        sample_rate: u32,
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Self, SignalError> {
        let fs = sample_rate as f64;
        Self::new((0..len).map(|n| f(n as f64 / fs)).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn source_channels(&self) -> u16 {
        self.source_channels
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Pure scalar gain.
    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
            source_channels: self.source_channels,
        }
    }

    /// Sample-wise sum of two buffers of equal rate and length.
    pub fn mix(&self, other: &AudioBuffer, other_gain: f64) -> Result<AudioBuffer, SignalError> {
        if self.sample_rate != other.sample_rate {
            return Err(SignalError::SampleRateMismatch(
                self.sample_rate,
                other.sample_rate,
            ));
        }
        if self.len() != other.len() {
            return Err(SignalError::LengthMismatch(self.len(), other.len()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + other_gain * b)
            .collect();
        AudioBuffer::new(samples, self.sample_rate)
    }

    /// SHA-256 over the sample rate and the little-endian bit patterns of every sample.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.sample_rate.to_le_bytes());
        for s in &self.samples {
            hasher.update(s.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}
