use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{predict_dp, ModelError, SigmoidParams};
use crate::analysis::{ConditionLabel, PerformanceMatrix, Subject};
use crate::rng::seeded;

/// Optional age covariate: baseline falls by `baseline_slope` per year above `mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeModel {
    pub mean: f64,
    pub sd: f64,
    pub baseline_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub condition_stis: Vec<f64>,
    /// Proportion correct in silence.
    pub baseline_mean: f64,
    pub baseline_sd: f64,
    /// Between-subject DP spread, percent.
    pub subject_sd: f64,
    /// Within-cell noise, percent.
    pub trial_sd: f64,
    pub seed: u64,
    #[serde(default)]
    pub age: Option<AgeModel>,
}

impl CohortSpec {
    /// 55 subjects, the four masked conditions, moderate noise.
    pub fn moderate_noise(seed: u64) -> Self {
        Self {
            n_subjects: 55,
            condition_stis: vec![0.25, 0.45, 0.75, 0.9],
            baseline_mean: 0.75,
            baseline_sd: 0.08,
            subject_sd: 2.0,
            trial_sd: 3.0,
            seed,
            age: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if self.n_subjects < 2 {
            return bad(format!("{} subjects, need at least 2", self.n_subjects));
        }
        if self.condition_stis.is_empty() {
            return bad("no conditions".into());
        }
        if let Some(s) = self
            .condition_stis
            .iter()
            .find(|s| !(0.0..=1.0).contains(*s))
        {
            return bad(format!("STI {s} outside [0, 1]"));
        }
        for (name, v) in [
            ("baseline_sd", self.baseline_sd),
            ("subject_sd", self.subject_sd),
            ("trial_sd", self.trial_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} {v} must be >= 0"));
            }
        }
        if !self.baseline_mean.is_finite() {
            return bad("baseline_mean must be finite".into());
        }
        if let Some(a) = &self.age {
            if !(a.sd >= 0.0 && a.mean.is_finite() && a.baseline_slope.is_finite()) {
                return bad("invalid age model".into());
            }
        }
        Ok(())
    }
}

/// Performance matrix with a `silence` column followed by one column per STI.
pub fn simulate_cohort(
    spec: &CohortSpec,
    params: &SigmoidParams,
) -> Result<PerformanceMatrix, ModelError> {
    spec.validate()?;
    params.validate()?;
    let normal = |sd: f64| Normal::new(0.0, sd).expect("validated sd");
    let (baseline, subject, trial) = (
        normal(spec.baseline_sd),
        normal(spec.subject_sd),
        normal(spec.trial_sd),
    );
    let mut rng = seeded(spec.seed);
    let dps: Vec<f64> = spec
        .condition_stis
        .iter()
        .map(|&s| predict_dp(s, params))
        .collect();

    let mut subjects = Vec::with_capacity(spec.n_subjects);
    let mut cells = Vec::with_capacity(spec.n_subjects);
    for i in 0..spec.n_subjects {
        let mut base = spec.baseline_mean + baseline.sample(&mut rng);
        let age = spec.age.map(|a| {
            let age = a.mean + normal(a.sd).sample(&mut rng);
            base -= a.baseline_slope * (age - a.mean);
            age
        });
        let offset = subject.sample(&mut rng);
        let mut row = Vec::with_capacity(dps.len() + 1);
        row.push(Some(
            (base + trial.sample(&mut rng) / 100.0).clamp(0.0, 1.0),
        ));
        for dp in &dps {
            let noise = trial.sample(&mut rng);
            row.push(Some(
                (base - (dp + offset) / 100.0 + noise / 100.0).clamp(0.0, 1.0),
            ));
        }
        subjects.push(Subject {
            id: format!("S{:03}", i + 1),
            age,
        });
        cells.push(row);
    }
    let mut conditions = vec![ConditionLabel::new("silence", None)];
    conditions.extend(
        spec.condition_stis
            .iter()
            .map(|&s| ConditionLabel::new(format!("sti_{s}"), Some(s))),
    );
    Ok(PerformanceMatrix::new(subjects, conditions, cells)?)
}
