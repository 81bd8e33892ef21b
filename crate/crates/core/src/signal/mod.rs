//! Audio primitives: WAV I/O, levels, the octave filterbank and LTASS shaping.

mod buffer;
pub mod filterbank;
pub mod level;
pub mod ltass;
pub mod spectrum;
pub mod synth;
pub mod wav;

pub use buffer::AudioBuffer;
pub use filterbank::{octave_filterbank, OctaveFilterbank, BAND_COUNT, OCTAVE_CENTERS};
pub use level::{
    a_weighted_level, a_weighting_db, band_levels, normalize_rms, rms, BandLevel, BandLevels,
    SoundLevel,
};
pub use ltass::{apply_ltass, ShapingConfig, SpectrumProfile};
pub use wav::{decode_wav, encode_wav, load_wave, save_wave, WavEncoding};

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported or corrupt WAV")]
    CorruptWav,
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("WAV file has no samples")]
    EmptyPayload,
    #[error("sample rate must be positive, got {0}")]
    InvalidSampleRate(u32),
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("cannot normalize silence")]
    Silent,
    #[error("target RMS must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("sample rate {sample_rate} Hz too low for the 8 kHz band (need > {required:.0} Hz)")]
    SampleRateTooLow { sample_rate: f64, required: f64 },
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),
    #[error("lengths differ: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("buffer too short for spectral shaping")]
    TooShortForShaping { seconds: f64, required: f64 },
    #[error("spectrum profile must cover the octave bands 125 Hz to 8 kHz")]
    ProfileCoverage,
    #[error("invalid spectrum profile: {0}")]
    InvalidProfile(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
