use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use super::ProtocolError;

/// Lowercase, trimmed, with diacritics removed.
pub fn normalize_word(word: &str) -> String {
    word.trim()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub per_position_correct: Vec<bool>,
    pub score: f64,
}

/// Strict serial-position scoring.
pub fn score_trial(presented: &[String], recalled: &[String]) -> TrialScore {
    let per_position_correct: Vec<bool> = presented
        .iter()
        .enumerate()
        .map(|(i, p)| {
            recalled
                .get(i)
                .is_some_and(|r| normalize_word(r) == normalize_word(p))
        })
        .collect();
    let score = if presented.is_empty() {
        0.0
    } else {
        per_position_correct.iter().filter(|&&c| c).count() as f64 / presented.len() as f64
    };
    TrialScore {
        per_position_correct,
        score,
    }
}

/// Response-time window kept for the Stroop medians, ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroopFilter {
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Default for StroopFilter {
    fn default() -> Self {
        Self {
            min_ms: 200.0,
            max_ms: 3000.0,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// median(incongruent) - median(congruent), after dropping out-of-window RTs.
pub fn stroop_interference(
    congruent_ms: &[f64],
    incongruent_ms: &[f64],
    filter: &StroopFilter,
) -> Result<f64, ProtocolError> {
    let keep = |rts: &[f64], class: &'static str| {
        let kept: Vec<f64> = rts
            .iter()
            .copied()
            .filter(|rt| (filter.min_ms..=filter.max_ms).contains(rt))
            .collect();
        if kept.is_empty() {
            Err(ProtocolError::EmptyClass(class))
        } else {
            Ok(kept)
        }
    };
    let c = keep(congruent_ms, "congruent")?;
    let i = keep(incongruent_ms, "incongruent")?;
    Ok(median(i) - median(c))
}
