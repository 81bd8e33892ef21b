use rand::Rng;

use super::StimulusError;
use crate::rng::seeded;
use crate::signal::{normalize_rms, rms, AudioBuffer};

/// Multi-talker babble: `n_talkers` streams, talker `t` reading source
/// `t % sources.len()` circularly offset by a seeded random amount, each equalized
/// to unit RMS before summation. The sum is rescaled to the mean source RMS and
/// has the length of the shortest source.
pub fn synth_babble(
    sources: &[AudioBuffer],
    n_talkers: usize,
    seed: u64,
) -> Result<AudioBuffer, StimulusError> {
    if n_talkers == 0 {
        return Err(StimulusError::InvalidSpec(
            "at least one talker is required".into(),
        ));
    }
    let first = sources
        .first()
        .ok_or_else(|| StimulusError::InsufficientMaterial("no speech sources".into()))?;
    let fs = first.sample_rate();
    if let Some(other) = sources.iter().find(|s| s.sample_rate() != fs) {
        return Err(StimulusError::SampleRateMismatch(fs, other.sample_rate()));
    }
    let len = sources.iter().map(|s| s.len()).min().unwrap_or(0);
    if len == 0 {
        return Err(StimulusError::InsufficientMaterial(
            "empty speech source".into(),
        ));
    }
    let mut levels = Vec::with_capacity(sources.len());
    for s in sources {
        let r = rms(&AudioBuffer::new(s.samples()[..len].to_vec(), fs)?)?;
        if r == 0.0 {
            return Err(StimulusError::InsufficientMaterial(
                "silent speech source".into(),
            ));
        }
        levels.push(r);
    }

    let mut rng = seeded(seed);
    let mut mix = vec![0.0; len];
    for talker in 0..n_talkers {
        let which = talker % sources.len();
        let src = &sources[which].samples()[..len];
        let offset = rng.random_range(0..len);
        let scale = 1.0 / levels[which];
        for (n, m) in mix.iter_mut().enumerate() {
            *m += src[(n + offset) % len] * scale;
        }
    }
    let target = levels.iter().sum::<f64>() / levels.len() as f64;
    let mixed = AudioBuffer::new(mix, fs)?;
    if rms(&mixed)? == 0.0 {
        return Err(StimulusError::InsufficientMaterial(
            "talkers cancelled to silence".into(),
        ));
    }
    Ok(normalize_rms(&mixed, target)?)
}
