use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::StimulusError;
use crate::rng::SeededRng;
use crate::signal::AudioBuffer;

/// How source material shorter than the condition is extended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopingConfig {
    pub enabled: bool,
    pub segment_s: f64,
    pub crossfade_s: f64,
}

impl Default for LoopingConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            segment_s: 10.0,
            crossfade_s: 0.05,
        }
    }
}

/// Produce exactly `len` samples from `source`: a plain prefix when the source is long
/// enough, otherwise shuffled segments joined by equal-power crossfades.
pub fn assemble(
    source: &AudioBuffer,
    len: usize,
    config: &LoopingConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>, StimulusError> {
    let src = source.samples();
    if src.len() >= len {
        return Ok(src[..len].to_vec());
    }
    if !config.enabled {
        return Err(StimulusError::SourcesTooShort {
            available_s: source.duration_secs(),
            required_s: len as f64 / source.sample_rate() as f64,
        });
    }
    let fs = source.sample_rate() as f64;
    let fade = (config.crossfade_s * fs).round() as usize;
    let seg_len = ((config.segment_s * fs).round() as usize).max(2 * fade + 1);
    if src.len() <= 2 * fade {
        return Err(StimulusError::InsufficientMaterial(format!(
            "{} samples cannot carry a {fade}-sample crossfade",
            src.len()
        )));
    }
    let segments: Vec<&[f64]> = {
        let all: Vec<&[f64]> = src.chunks(seg_len).collect();
        let n = all.len();
        all.into_iter()
            .enumerate()
            .filter(|(i, c)| *i + 1 < n || c.len() > 2 * fade || n == 1)
            .map(|(_, c)| c)
            .collect()
    };

    let mut out: Vec<f64> = Vec::with_capacity(len + seg_len);
    let mut order: Vec<usize> = (0..segments.len()).collect();
    while out.len() < len {
        order.shuffle(rng);
        for &i in &order {
            let seg = segments[i];
            if out.is_empty() {
                out.extend_from_slice(seg);
            } else {
                let start = out.len() - fade;
                for (k, &s) in seg[..fade].iter().enumerate() {
                    let theta = (k as f64 + 0.5) / fade as f64 * std::f64::consts::FRAC_PI_2;
                    out[start + k] = out[start + k] * theta.cos() + s * theta.sin();
                }
                out.extend_from_slice(&seg[fade..]);
            }
            if out.len() >= len {
                break;
            }
        }
    }
    out.truncate(len);
    Ok(out)
}
