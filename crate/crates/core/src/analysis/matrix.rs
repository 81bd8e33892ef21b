use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{io_error, AnalysisError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub age: Option<f64>,
}

/// Column label plus the STI of the condition (`None` for silence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionLabel {
    pub label: String,
    pub sti: Option<f64>,
}

impl ConditionLabel {
    pub fn new(label: impl Into<String>, sti: Option<f64>) -> Self {
        Self {
            label: label.into(),
            sti,
        }
    }

    fn header(&self) -> String {
        match self.sti {
            Some(s) => format!("{}@{s}", self.label),
            None => self.label.clone(),
        }
    }

    fn from_header(cell: &str, line: usize) -> Result<Self, AnalysisError> {
        match cell.split_once('@') {
            None => Ok(Self::new(cell, None)),
            Some((label, sti)) => {
                let sti: f64 = sti.trim().parse().map_err(|_| AnalysisError::Parse {
                    line,
                    message: format!("bad STI in column {cell:?}"),
                })?;
                Ok(Self::new(label, Some(sti)))
            }
        }
    }
}

/// Subjects × conditions, mean proportion correct per cell. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMatrix {
    subjects: Vec<Subject>,
    conditions: Vec<ConditionLabel>,
    cells: Vec<Vec<Option<f64>>>,
}

impl PerformanceMatrix {
    pub fn new(
        subjects: Vec<Subject>,
        conditions: Vec<ConditionLabel>,
        cells: Vec<Vec<Option<f64>>>,
    ) -> Result<Self, AnalysisError> {
        if cells.len() != subjects.len() {
            return Err(AnalysisError::LengthMismatch(subjects.len(), cells.len()));
        }
        unique("subject", subjects.iter().map(|s| s.id.as_str()))?;
        unique("condition", conditions.iter().map(|c| c.label.as_str()))?;
        for (i, row) in cells.iter().enumerate() {
            if row.len() != conditions.len() {
                return Err(AnalysisError::NotRectangular {
                    row: i,
                    expected: conditions.len(),
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(AnalysisError::OutOfRange {
                            subject: subjects[i].id.clone(),
                            condition: conditions[j].label.clone(),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(Self {
            subjects,
            conditions,
            cells,
        })
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn conditions(&self) -> &[ConditionLabel] {
        &self.conditions
    }

    pub fn cells(&self) -> &[Vec<Option<f64>>] {
        &self.cells
    }

    pub fn cell(&self, subject: usize, condition: usize) -> Option<f64> {
        self.cells.get(subject)?.get(condition).copied().flatten()
    }

    pub fn condition_index(&self, label: &str) -> Option<usize> {
        self.conditions.iter().position(|c| c.label == label)
    }

    /// Cells as complete rows, or the first missing cell as an error.
    pub fn complete_rows(&self) -> Result<Vec<Vec<f64>>, AnalysisError> {
        self.cells
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

    /// Mean over a subject's available cells.
    pub fn subject_mean(&self, subject: usize) -> Option<f64> {
        let vals: Vec<f64> = self.cells[subject].iter().flatten().copied().collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject".to_string(), "age".to_string()];
        header.extend(self.conditions.iter().map(ConditionLabel::header));
        w.write_record(&header)?;
        for (s, row) in self.subjects.iter().zip(&self.cells) {
            let mut rec = vec![
                s.id.clone(),
                s.age.map(|a| a.to_string()).unwrap_or_default(),
            ];
            rec.extend(
                row.iter()
                    .map(|v| v.map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| AnalysisError::Io {
            path: "<matrix>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, AnalysisError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "subject" || &header[1] != "age" {
            return Err(AnalysisError::Parse {
                line: 1,
                message: "header must start with subject,age and name at least one condition"
                    .into(),
            });
        }
        let conditions = header
            .iter()
            .skip(2)
            .map(|c| ConditionLabel::from_header(c, 1))
            .collect::<Result<Vec<_>, _>>()?;
        let mut subjects = Vec::new();
        let mut cells = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let num = |text: &str| -> Result<Option<f64>, AnalysisError> {
                if text.is_empty() {
                    return Ok(None);
                }
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| AnalysisError::Parse {
                        line,
                        message: format!("not a number: {text:?}"),
                    })
            };
            subjects.push(Subject {
                id: rec[0].to_string(),
                age: num(&rec[1])?,
            });
            cells.push(rec.iter().skip(2).map(num).collect::<Result<Vec<_>, _>>()?);
        }
        Self::new(subjects, conditions, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let path = path.as_ref();
        Self::read_csv(std::fs::File::open(path).map_err(io_error(path))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AnalysisError> {
        let path = path.as_ref();
        self.write_csv(std::fs::File::create(path).map_err(io_error(path))?)
    }
}

fn unique<'a>(
    what: &'static str,
    labels: impl Iterator<Item = &'a str>,
) -> Result<(), AnalysisError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(AnalysisError::Duplicate {
                what,
                label: l.to_string(),
            });
        }
    }
    Ok(())
}
