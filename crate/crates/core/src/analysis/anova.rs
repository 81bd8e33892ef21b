use serde::{Deserialize, Serialize};

use super::{f_cdf_upper, AnalysisError, DpTable, PerformanceMatrix};

/// One-way repeated-measures decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+inf` when the error term vanishes but conditions differ; 0 when nothing varies.
    pub f: f64,
    pub df_effect: usize,
    pub df_error: usize,
    pub p: f64,
    pub ss_effect: f64,
    pub ss_subjects: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    /// Set when the subject × condition residual is zero (every subject shows the same pattern).
    pub zero_error_variance: bool,
}

/// Tables that can be read as complete subjects × conditions rows.
pub trait RepeatedMeasures {
    fn rows(&self) -> Result<Vec<Vec<f64>>, AnalysisError>;
}

impl RepeatedMeasures for PerformanceMatrix {
    fn rows(&self) -> Result<Vec<Vec<f64>>, AnalysisError> {
        self.complete_rows()
    }
}

impl RepeatedMeasures for DpTable {
    fn rows(&self) -> Result<Vec<Vec<f64>>, AnalysisError> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.ok_or_else(|| AnalysisError::Incomplete {
                            subject: self.subjects[i].id.clone(),
                            condition: self.conditions[j].label.clone(),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn rm_anova(table: &impl RepeatedMeasures) -> Result<AnovaResult, AnalysisError> {
    rm_anova_rows(&table.rows()?)
}

pub fn rm_anova_rows(rows: &[Vec<f64>]) -> Result<AnovaResult, AnalysisError> {
    let n = rows.len();
    if n < 2 {
        return Err(AnalysisError::TooFew {
            what: "subjects",
            required: 2,
            found: n,
        });
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(AnalysisError::TooFew {
            what: "conditions",
            required: 2,
            found: k,
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != k {
            return Err(AnalysisError::NotRectangular {
                row: i,
                expected: k,
                found: r.len(),
            });
        }
        if let Some(v) = r.iter().find(|v| !v.is_finite()) {
            return Err(AnalysisError::InvalidStatistic(*v));
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let grand = rows.iter().flatten().sum::<f64>() / (nf * kf);
    let subj_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / kf).collect();
    let cond_means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();

    let ss_total: f64 = rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_effect = nf * cond_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_subjects = kf * subj_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_error: f64 = rows
        .iter()
        .zip(&subj_means)
        .flat_map(|(r, sm)| {
            r.iter()
                .zip(&cond_means)
                .map(move |(v, cm)| (v - sm - cm + grand).powi(2))
        })
        .sum();

    let df_effect = k - 1;
    let df_error = (k - 1) * (n - 1);
    let zero_error = ss_error <= 1e-24 * ss_total.max(f64::MIN_POSITIVE) || ss_error == 0.0;
    let effect_zero = ss_effect <= 1e-24 * ss_total.max(f64::MIN_POSITIVE);
    let (f, p) = if zero_error {
        if effect_zero {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (ss_effect / df_effect as f64) / (ss_error / df_error as f64);
        (f, f_cdf_upper(f, df_effect as f64, df_error as f64)?)
    };
    Ok(AnovaResult {
        f,
        df_effect,
        df_error,
        p,
        ss_effect,
        ss_subjects,
        ss_error,
        ss_total,
        zero_error_variance: zero_error,
    })
}
