//! Logistic decrease-in-performance curve over STI: prediction, fitting, and
//! simulated cohorts for statistical checks.

mod cohort;
mod fit;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;

pub use cohort::{simulate_cohort, AgeModel, CohortSpec};
pub use fit::{fit_grid, fit_sigmoid, profiled_residual, FitResult, GRID_MIDPOINTS, GRID_SLOPES};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid sigmoid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// `dp_max / (1 + exp(-slope * (sti - midpoint)))`, DP in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub dp_max: f64,
    pub midpoint: f64,
    pub slope: f64,
}

impl SigmoidParams {
    pub fn new(dp_max: f64, midpoint: f64, slope: f64) -> Result<Self, ModelError> {
        let p = Self {
            dp_max,
            midpoint,
            slope,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.dp_max >= 0.0 && self.dp_max.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "dp_max {} < 0",
                self.dp_max
            )));
        }
        if !(self.midpoint > 0.0 && self.midpoint < 1.0) {
            return Err(ModelError::InvalidParams(format!(
                "midpoint {} outside (0, 1)",
                self.midpoint
            )));
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "slope {} <= 0",
                self.slope
            )));
        }
        Ok(())
    }
}

/// Calibrated defaults: a plateau near 7 % above STI 0.7 and a steep rise between
/// 0.25 and 0.7. Configuration, not measured constants.
impl Default for SigmoidParams {
    fn default() -> Self {
        Self {
            dp_max: 7.0,
            midpoint: 0.45,
            slope: 12.0,
        }
    }
}

pub fn predict_dp(sti: f64, params: &SigmoidParams) -> f64 {
    params.dp_max * logistic(params.slope * (sti - params.midpoint))
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpObservation {
    pub sti: f64,
    /// Percent; may be negative.
    pub dp: f64,
}

impl DpObservation {
    pub fn new(sti: f64, dp: f64) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&sti) {
            return Err(ModelError::InvalidObservation(format!(
                "sti {sti} outside [0, 1]"
            )));
        }
        if !dp.is_finite() {
            return Err(ModelError::InvalidObservation(format!(
                "dp {dp} not finite"
            )));
        }
        Ok(Self { sti, dp })
    }

    /// Read `sti,dp` rows with a header line.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<Self>, ModelError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = r.headers().map_err(AnalysisError::from)?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (Some(si), Some(di)) = (col("sti"), col("dp")) else {
            return Err(ModelError::InvalidObservation(
                "header needs sti and dp columns".into(),
            ));
        };
        let mut out = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(AnalysisError::from)?;
            let field = |j: usize| -> Result<f64, ModelError> {
                rec.get(j).and_then(|t| t.parse().ok()).ok_or_else(|| {
                    ModelError::InvalidObservation(format!("line {}: bad number", i + 2))
                })
            };
            out.push(Self::new(field(si)?, field(di)?)?);
        }
        Ok(out)
    }
}
