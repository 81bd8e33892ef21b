use serde::{Deserialize, Serialize};

use super::{AnalysisError, ConditionLabel, PerformanceMatrix, Subject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpUnit {
    Proportion,
    Percent,
}

/// Control minus condition, per subject and non-control condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpTable {
    pub subjects: Vec<Subject>,
    pub control: String,
    pub conditions: Vec<ConditionLabel>,
    pub unit: DpUnit,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn decrease_in_performance(
    matrix: &PerformanceMatrix,
    control: &str,
) -> Result<DpTable, AnalysisError> {
    let c = matrix
        .condition_index(control)
        .ok_or_else(|| AnalysisError::MissingControl(control.to_string()))?;
    let keep: Vec<usize> = (0..matrix.conditions().len()).filter(|&j| j != c).collect();
    let values = matrix
        .cells()
        .iter()
        .map(|row| keep.iter().map(|&j| Some(row[c]? - row[j]?)).collect())
        .collect();
    Ok(DpTable {
        subjects: matrix.subjects().to_vec(),
        control: control.to_string(),
        conditions: keep
            .iter()
            .map(|&j| matrix.conditions()[j].clone())
            .collect(),
        unit: DpUnit::Proportion,
        values,
    })
}

impl DpTable {
    pub fn to_percent(&self) -> Self {
        let factor = match self.unit {
            DpUnit::Proportion => 100.0,
            DpUnit::Percent => 1.0,
        };
        Self {
            unit: DpUnit::Percent,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v.map(|v| v * factor)).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// Mean DP per condition over subjects with a value.
    pub fn condition_means(&self) -> Vec<Option<f64>> {
        (0..self.conditions.len())
            .map(|j| {
                let vals: Vec<f64> = self.values.iter().filter_map(|r| r[j]).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    pub fn subject_mean(&self, subject: usize) -> Option<f64> {
        let vals: Vec<f64> = self.values[subject].iter().flatten().copied().collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}
