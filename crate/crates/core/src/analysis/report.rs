use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    cluster_two_groups, decrease_in_performance, io_error, pearson_r, rm_anova, rm_anova_rows,
    AnalysisError, AnovaResult, ClusterAssignment, ConditionLabel, Correlation, DpTable, DpUnit,
    PerformanceMatrix, Subject,
};

pub const REPORT_FILES: [&str; 6] = [
    "matrix.csv",
    "dp.csv",
    "anova.csv",
    "clusters.csv",
    "correlation.csv",
    "dp_vs_sti.csv",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub matrix: PerformanceMatrix,
    pub dp: DpTable,
    /// On DP across the noise conditions.
    pub anova_dp: Option<AnovaResult>,
    /// On raw performance across all conditions.
    pub anova_raw: Option<AnovaResult>,
    /// Present when every subject has an age.
    pub clusters: Option<ClusterAssignment>,
    pub age_vs_performance: Option<Correlation>,
    pub age_vs_dp: Option<Correlation>,
}

pub fn build_report(
    matrix: &PerformanceMatrix,
    control: &str,
    seed: u64,
) -> Result<Report, AnalysisError> {
    if matrix.subjects().is_empty() {
        return Err(AnalysisError::EmptyCohort);
    }
    let dp = decrease_in_performance(matrix, control)?;
    let anova_dp = rm_anova(&dp).ok();
    let anova_raw = matrix
        .complete_rows()
        .ok()
        .and_then(|rows| rm_anova_rows(&rows).ok());

    let ages: Option<Vec<f64>> = matrix.subjects().iter().map(|s| s.age).collect();
    let perf: Option<Vec<f64>> = (0..matrix.subjects().len())
        .map(|i| matrix.subject_mean(i))
        .collect();
    let mean_dp: Option<Vec<f64>> = (0..dp.subjects.len()).map(|i| dp.subject_mean(i)).collect();
    let (mut clusters, mut age_vs_performance, mut age_vs_dp) = (None, None, None);
    if let (Some(ages), Some(perf)) = (&ages, &perf) {
        let points: Vec<(f64, f64)> = ages.iter().copied().zip(perf.iter().copied()).collect();
        clusters = cluster_two_groups(&points, seed).ok();
        age_vs_performance = pearson_r(ages, perf).ok();
        if let Some(mean_dp) = &mean_dp {
            age_vs_dp = pearson_r(ages, mean_dp).ok();
        }
    }
    Ok(Report {
        matrix: matrix.clone(),
        dp,
        anova_dp,
        anova_raw,
        clusters,
        age_vs_performance,
        age_vs_dp,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, AnalysisError> {
    Ok(csv::Writer::from_writer(
        std::fs::File::create(path).map_err(io_error(path))?,
    ))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), AnalysisError> {
    w.flush().map_err(io_error(path))
}

/// Write the report tables into `dir`, returning the written paths.
pub fn export_report(
    report: &Report,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, AnalysisError> {
    let dir = dir.as_ref();
    let ids: Vec<&str> = report
        .matrix
        .subjects()
        .iter()
        .map(|s| s.id.as_str())
        .collect();
    if report.matrix.subjects().is_empty() {
        return Err(AnalysisError::EmptyCohort);
    }
    let dp_ids: Vec<&str> = report.dp.subjects.iter().map(|s| s.id.as_str()).collect();
    if dp_ids != ids {
        return Err(AnalysisError::Inconsistent(
            "DP table and matrix list different subjects".into(),
        ));
    }
    if let Some(c) = &report.clusters {
        if c.labels.len() != ids.len() {
            return Err(AnalysisError::Inconsistent(format!(
                "{} cluster labels for {} subjects",
                c.labels.len(),
                ids.len()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let paths: Vec<PathBuf> = REPORT_FILES.iter().map(|f| dir.join(f)).collect();

    report.matrix.save(&paths[0])?;

    let mut w = csv_writer(&paths[1])?;
    w.write_record(["subject", "condition", "sti", "dp", "unit"])?;
    let unit = match report.dp.unit {
        DpUnit::Proportion => "proportion",
        DpUnit::Percent => "percent",
    };
    for (s, row) in report.dp.subjects.iter().zip(&report.dp.values) {
        for (c, v) in report.dp.conditions.iter().zip(row) {
            w.write_record([&s.id, &c.label, &opt(c.sti), &opt(*v), unit])?;
        }
    }
    finish(w, &paths[1])?;

    let mut w = csv_writer(&paths[2])?;
    w.write_record(["scope", "source", "ss", "df", "ms", "f", "p"])?;
    for (scope, a) in [("dp", &report.anova_dp), ("raw", &report.anova_raw)] {
        let Some(a) = a else { continue };
        let ms_effect = a.ss_effect / a.df_effect as f64;
        let ms_error = a.ss_error / a.df_error as f64;
        w.write_record([
            scope,
            "condition",
            &a.ss_effect.to_string(),
            &a.df_effect.to_string(),
            &ms_effect.to_string(),
            &a.f.to_string(),
            &a.p.to_string(),
        ])?;
        w.write_record([
            scope,
            "subjects",
            &a.ss_subjects.to_string(),
            &(report.matrix.subjects().len() - 1).to_string(),
            "",
            "",
            "",
        ])?;
        w.write_record([
            scope,
            "error",
            &a.ss_error.to_string(),
            &a.df_error.to_string(),
            &ms_error.to_string(),
            "",
            "",
        ])?;
        w.write_record([scope, "total", &a.ss_total.to_string(), "", "", "", ""])?;
    }
    finish(w, &paths[2])?;

    let mut w = csv_writer(&paths[3])?;
    w.write_record(["subject", "age", "mean_performance", "group"])?;
    for (i, s) in report.matrix.subjects().iter().enumerate() {
        let group = report
            .clusters
            .as_ref()
            .map(|c| c.labels[i].to_string())
            .unwrap_or_default();
        w.write_record([
            &s.id,
            &opt(s.age),
            &opt(report.matrix.subject_mean(i)),
            &group,
        ])?;
    }
    finish(w, &paths[3])?;

    let mut w = csv_writer(&paths[4])?;
    w.write_record(["x", "y", "r", "p", "n"])?;
    for (y, c) in [
        ("mean_performance", report.age_vs_performance),
        ("mean_dp", report.age_vs_dp),
    ] {
        if let Some(c) = c {
            w.write_record([
                "age",
                y,
                &c.r.to_string(),
                &c.p.to_string(),
                &c.n.to_string(),
            ])?;
        }
    }
    finish(w, &paths[4])?;

    let pct = report.dp.to_percent();
    let mut w = csv_writer(&paths[5])?;
    w.write_record(["condition", "sti", "mean_dp_percent", "sd_dp_percent", "n"])?;
    for (j, c) in pct.conditions.iter().enumerate() {
        let vals: Vec<f64> = pct.values.iter().filter_map(|r| r[j]).collect();
        let n = vals.len();
        let mean = (n > 0).then(|| vals.iter().sum::<f64>() / n as f64);
        let sd = mean
            .filter(|_| n > 1)
            .map(|m| (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt());
        w.write_record([&c.label, &opt(c.sti), &opt(mean), &opt(sd), &n.to_string()])?;
    }
    finish(w, &paths[5])?;
    Ok(paths)
}

/// Read a long-format DP table written by [`export_report`].
pub fn read_dp_csv<R: Read>(input: R, control: &str) -> Result<DpTable, AnalysisError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut subjects: Vec<Subject> = Vec::new();
    let mut conditions: Vec<ConditionLabel> = Vec::new();
    let mut cells: Vec<(usize, usize, Option<f64>)> = Vec::new();
    let mut unit = None;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| AnalysisError::Parse { line, message };
        if rec.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", rec.len())));
        }
        let num = |t: &str| -> Result<Option<f64>, AnalysisError> {
            if t.is_empty() {
                Ok(None)
            } else {
                t.parse()
                    .map(Some)
                    .map_err(|_| bad(format!("not a number: {t:?}")))
            }
        };
        let s = match subjects.iter().position(|s| s.id == rec[0]) {
            Some(s) => s,
            None => {
                subjects.push(Subject {
                    id: rec[0].to_string(),
                    age: None,
                });
                subjects.len() - 1
            }
        };
        let c = match conditions.iter().position(|c| c.label == rec[1]) {
            Some(c) => c,
            None => {
                conditions.push(ConditionLabel::new(&rec[1], num(&rec[2])?));
                conditions.len() - 1
            }
        };
        let u = match &rec[4] {
            "proportion" => DpUnit::Proportion,
            "percent" => DpUnit::Percent,
            other => return Err(bad(format!("unknown unit {other:?}"))),
        };
        if unit.replace(u).is_some_and(|prev| prev != u) {
            return Err(bad("mixed units".into()));
        }
        cells.push((s, c, num(&rec[3])?));
    }
    let mut values = vec![vec![None; conditions.len()]; subjects.len()];
    for (s, c, v) in cells {
        values[s][c] = v;
    }
    Ok(DpTable {
        subjects,
        control: control.to_string(),
        conditions,
        unit: unit.unwrap_or(DpUnit::Proportion),
        values,
    })
}
