use std::collections::BTreeMap;

use ise_core::analysis::{AnalysisError, ConditionLabel, PerformanceMatrix, Subject};
use ise_core::protocol::{standard_conditions, stroop_interference, Load, Span, StroopFilter};
use serde::{Deserialize, Serialize};

use crate::record::{
    InstrumentRecord, Participant, SessionRecord, SessionStatus, StroopRecord, TrialResult,
};
use crate::{LabError, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionPerformance {
    pub condition: String,
    pub sti: Option<f64>,
    pub block: Option<usize>,
    pub trials: usize,
    /// Mean strict serial-recall score over all lists, in [0, 1].
    pub mean_score: Option<f64>,
    pub high_load_mean: Option<f64>,
    pub low_load_mean: Option<f64>,
}

/// Everything recorded for one finished session, in analysis-ready form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub schema_version: u32,
    pub session_id: String,
    pub participant: Participant,
    pub seed: u64,
    pub status: SessionStatus,
    /// Set when the session stopped before all conditions were run.
    pub partial: bool,
    pub abort_reason: Option<String>,
    pub span: Option<Span>,
    pub condition_order: Vec<String>,
    pub conditions: Vec<ConditionPerformance>,
    /// Incongruent minus congruent mean RT over correct trials, when computable.
    pub stroop_interference_ms: Option<f64>,
    pub stroop: Vec<StroopRecord>,
    pub instruments: Vec<InstrumentRecord>,
    pub trials: Vec<TrialResult>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl ExportBundle {
    pub fn from_record(record: &SessionRecord) -> Result<Self, LabError> {
        if !record.is_closed() {
            return Err(LabError::NotFinished);
        }
        let order: Vec<String> = record
            .plan
            .as_ref()
            .map(|p| p.blocks.iter().map(|b| b.condition.id.clone()).collect())
            .unwrap_or_default();
        let conditions = standard_conditions()
            .into_iter()
            .map(|c| {
                let trials: Vec<&TrialResult> = record
                    .trials
                    .iter()
                    .filter(|t| t.condition == c.id)
                    .collect();
                let by_load =
                    |load: Load| mean(trials.iter().filter(|t| t.load == load).map(|t| t.score));
                ConditionPerformance {
                    block: order.iter().position(|o| *o == c.id),
                    trials: trials.len(),
                    mean_score: mean(trials.iter().map(|t| t.score)),
                    high_load_mean: by_load(Load::High),
                    low_load_mean: by_load(Load::Low),
                    condition: c.id,
                    sti: c.sti,
                }
            })
            .collect();
        let rts = |congruent: bool| -> Vec<f64> {
            record
                .stroop
                .iter()
                .filter(|s| s.correct && s.congruent == congruent)
                .map(|s| s.rt_ms)
                .collect()
        };
        let stroop_interference_ms =
            stroop_interference(&rts(true), &rts(false), &StroopFilter::default()).ok();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            session_id: record.session_id.clone(),
            participant: record.participant.clone(),
            seed: record.seed,
            status: record.status,
            partial: record.status != SessionStatus::Complete,
            abort_reason: record.abort_reason.clone(),
            span: record.span.span,
            condition_order: order,
            conditions,
            stroop_interference_ms,
            stroop: record.stroop.clone(),
            instruments: record.instruments.clone(),
            trials: record.trials.clone(),
        })
    }

    pub fn condition(&self, id: &str) -> Option<&ConditionPerformance> {
        self.conditions.iter().find(|c| c.condition == id)
    }

    /// Subscale scores keyed by `instrument[/block]` then subscale.
    pub fn instrument_scores(&self) -> BTreeMap<String, BTreeMap<String, f64>> {
        self.instruments
            .iter()
            .map(|r| {
                let key = match r.block {
                    Some(b) => format!("{}/{b}", r.instrument),
                    None => r.instrument.clone(),
                };
                (key, r.scores.clone())
            })
            .collect()
    }
}

/// Subject-by-condition matrix of mean recall scores (proportion correct).
/// Conditions a participant never reached are left empty.
pub fn matrix_from_bundles(bundles: &[ExportBundle]) -> Result<PerformanceMatrix, AnalysisError> {
    let conditions: Vec<ConditionLabel> = standard_conditions()
        .into_iter()
        .map(|c| ConditionLabel::new(c.id, c.sti))
        .collect();
    let subjects = bundles
        .iter()
        .map(|b| Subject {
            id: b.participant.id.clone(),
            age: b.participant.age,
        })
        .collect();
    let cells = bundles
        .iter()
        .map(|b| {
            conditions
                .iter()
                .map(|c| b.condition(&c.label).and_then(|p| p.mean_score))
                .collect()
        })
        .collect();
    PerformanceMatrix::new(subjects, conditions, cells)
}
