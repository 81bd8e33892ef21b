//! Decrease in performance, repeated-measures ANOVA, correlation and clustering.

mod anova;
mod cluster;
mod correlation;
mod dp;
mod fdist;
mod matrix;
mod report;

pub use anova::{rm_anova, rm_anova_rows, AnovaResult, RepeatedMeasures};
pub use cluster::{cluster_features, cluster_two_groups, ClusterAssignment, ClusterConfig};
pub use correlation::{pearson_r, Correlation};
pub use dp::{decrease_in_performance, DpTable, DpUnit};
pub use fdist::{f_cdf_upper, ln_gamma, regularized_incomplete_beta};
pub use matrix::{ConditionLabel, PerformanceMatrix, Subject};
pub use report::{build_report, export_report, read_dp_csv, Report, REPORT_FILES};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("control condition {0:?} not found")]
    MissingControl(String),
    #[error("incomplete matrix: subject {subject:?} has no value for {condition:?}")]
    Incomplete { subject: String, condition: String },
    #[error("need at least {required} {what}, got {found}")]
    TooFew {
        what: &'static str,
        required: usize,
        found: usize,
    },
    #[error("cell ({subject:?}, {condition:?}) = {value} outside [0, 1]")]
    OutOfRange {
        subject: String,
        condition: String,
        value: f64,
    },
    #[error("non-rectangular table: row {row} has {found} cells, expected {expected}")]
    NotRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate {what} {label:?}")]
    Duplicate { what: &'static str, label: String },
    #[error("constant input: correlation undefined")]
    ConstantInput,
    #[error("all points identical: cannot form two groups")]
    IdenticalPoints,
    #[error("invalid degrees of freedom ({d1}, {d2})")]
    InvalidDf { d1: f64, d2: f64 },
    #[error("invalid statistic {0}")]
    InvalidStatistic(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty cohort")]
    EmptyCohort,
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_error(
    path: &std::path::Path,
) -> impl FnOnce(std::io::Error) -> AnalysisError + '_ {
    move |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    }
}
