use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{ProtocolError, Span};
use crate::rng::substream;
use crate::stimulus::CONDITION_TARGETS;

pub const PLAN_SCHEMA_VERSION: u32 = 1;
pub const LISTS_PER_CONDITION: usize = 16;

const DEFAULT_WORD_POOL: &str = include_str!("../../data/word_pool.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    /// `silence` or `sti_<value>`, matching stimulus manifests.
    pub id: String,
    pub sti: Option<f64>,
}

/// Silence followed by the four masked conditions.
pub fn standard_conditions() -> Vec<Condition> {
    let mut out = vec![Condition {
        id: "silence".into(),
        sti: None,
    }];
    out.extend(CONDITION_TARGETS.iter().map(|&t| Condition {
        id: format!("sti_{t}"),
        sti: Some(t),
    }));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Load {
    /// span + 2 words
    High,
    /// span - 1 words
    Low,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub load: Load,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBlock {
    pub condition: Condition,
    pub trials: Vec<PlannedTrial>,
}

/// Questionnaires given at a point in the session; `after_block = None` is the start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireSlot {
    pub after_block: Option<usize>,
    pub instruments: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum OrderMode {
    /// Seeded uniform permutation.
    Random,
    /// Row of a Williams design, balanced for first-order carry-over.
    LatinSquare { row: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub schema_version: u32,
    pub participant_id: String,
    pub span: usize,
    pub seed: u64,
    pub order_mode: OrderMode,
    pub blocks: Vec<ConditionBlock>,
    pub schedule: Vec<QuestionnaireSlot>,
}

impl SessionPlan {
    pub fn condition_order(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .map(|b| b.condition.id.as_str())
            .collect()
    }

    pub fn total_lists(&self) -> usize {
        self.blocks.iter().map(|b| b.trials.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPool {
    words: Vec<String>,
}

impl WordPool {
    pub fn new(words: Vec<String>) -> Result<Self, ProtocolError> {
        let mut seen = HashSet::new();
        for w in &words {
            if !seen.insert(super::normalize_word(w)) {
                return Err(ProtocolError::DuplicateWord(w.clone()));
            }
        }
        Ok(Self { words })
    }

    /// One word per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn default_pool() -> Self {
        Self::parse(DEFAULT_WORD_POOL).expect("bundled word pool is valid")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `len` distinct words.
    pub fn draw(&self, len: usize, rng: &mut impl rand::Rng) -> Result<Vec<String>, ProtocolError> {
        if len > self.words.len() {
            return Err(ProtocolError::PoolTooSmall {
                needed: len,
                available: self.words.len(),
            });
        }
        Ok(index::sample(rng, self.words.len(), len)
            .into_iter()
            .map(|i| self.words[i].clone())
            .collect())
    }
}

/// Williams design rows for `n` treatments (2n rows when `n` is odd).
pub fn williams_square(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return Vec::new();
    }
    // 0, 1, n-1, 2, n-2, ...
    let first: Vec<usize> = (0..n)
        .map(|k| match k {
            0 => 0,
            k if k % 2 == 1 => k.div_ceil(2),
            k => n - k / 2,
        })
        .collect();
    let mut rows: Vec<Vec<usize>> = (0..n)
        .map(|r| first.iter().map(|c| (c + r) % n).collect())
        .collect();
    if n % 2 == 1 {
        let mirrored: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| r.iter().rev().copied().collect())
            .collect();
        rows.extend(mirrored);
    }
    rows
}

pub fn build_session_plan(
    participant_id: &str,
    span: Span,
    pool: &WordPool,
    seed: u64,
    order_mode: OrderMode,
) -> Result<SessionPlan, ProtocolError> {
    let n = match span {
        Span::NoCorrectList => return Err(ProtocolError::NoSpan),
        Span::Length(n) if n < 2 => return Err(ProtocolError::SpanTooSmall(n)),
        Span::Length(n) => n,
    };
    if pool.len() < n + 2 {
        return Err(ProtocolError::PoolTooSmall {
            needed: n + 2,
            available: pool.len(),
        });
    }
    let conditions = standard_conditions();
    let order: Vec<usize> = match order_mode {
        OrderMode::Random => {
            let mut o: Vec<usize> = (0..conditions.len()).collect();
            o.shuffle(&mut substream(seed, 0));
            o
        }
        OrderMode::LatinSquare { row } => {
            let rows = williams_square(conditions.len());
            rows[row % rows.len()].clone()
        }
    };

    let mut blocks = Vec::with_capacity(order.len());
    for (b, &c) in order.iter().enumerate() {
        let mut rng = substream(seed, 1 + b as u64);
        let mut loads: Vec<Load> = (0..LISTS_PER_CONDITION)
            .map(|i| {
                if i < LISTS_PER_CONDITION / 2 {
                    Load::High
                } else {
                    Load::Low
                }
            })
            .collect();
        loads.shuffle(&mut rng);
        let trials = loads
            .into_iter()
            .map(|load| {
                let len = match load {
                    Load::High => n + 2,
                    Load::Low => n - 1,
                };
                Ok(PlannedTrial {
                    load,
                    words: pool.draw(len, &mut rng)?,
                })
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        blocks.push(ConditionBlock {
            condition: conditions[c].clone(),
            trials,
        });
    }

    let mut schedule = vec![QuestionnaireSlot {
        after_block: None,
        instruments: vec!["thayer".into()],
    }];
    schedule.extend((0..blocks.len()).map(|b| QuestionnaireSlot {
        after_block: Some(b),
        instruments: vec!["rtlx".into(), "annoyance".into(), "thayer".into()],
    }));

    Ok(SessionPlan {
        schema_version: PLAN_SCHEMA_VERSION,
        participant_id: participant_id.to_string(),
        span: n,
        seed,
        order_mode,
        blocks,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn williams_rows_balance_carryover() {
        for n in [2usize, 3, 4, 5, 6] {
            let rows = williams_square(n);
            let mut pairs = std::collections::HashMap::new();
            for r in &rows {
                let mut sorted = r.clone();
                sorted.sort();
                assert_eq!(sorted, (0..n).collect::<Vec<_>>());
                for w in r.windows(2) {
                    *pairs.entry((w[0], w[1])).or_insert(0) += 1;
                }
            }
            let counts: HashSet<i32> = pairs.values().copied().collect();
            assert_eq!(pairs.len(), n * (n - 1), "n = {n}");
            assert_eq!(counts.len(), 1, "n = {n}");
        }
    }
}
