//! Learning-curve containers shared by ingestion, calibration, and reporting.

use thiserror::Error;

use crate::metrics::{CalibratedRisk, Risk};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("curve must contain at least one point")]
    Empty,
    #[error("curve n values must be strictly increasing (n={n} follows n={prev})")]
    NonAscendingN { prev: u64, n: u64 },
    #[error("transfer-set size n must be positive")]
    ZeroN,
    #[error("dispersion must be non-negative, got {0}")]
    NegativeDispersion(f64),
    #[error("each point must aggregate at least one seed")]
    ZeroSeeds,
}

/// One aggregated measurement: mean risk over seeds at transfer-set size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub risk: Risk,
    /// Standard error of the mean over seeds; 0 when a single seed was run.
    pub std_error: f64,
    pub seed_count: u32,
}

/// Empirical risk as a function of transfer-set size for one (method, task).
///
/// Points are strictly increasing in `n` and there is at least one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    method: String,
    task: String,
    points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn new(
        method: impl Into<String>,
        task: impl Into<String>,
        points: Vec<CurvePoint>,
    ) -> Result<Self, CurveError> {
        validate_grid(points.iter().map(|p| p.n))?;
        for p in &points {
            if !(p.std_error >= 0.0 && p.std_error.is_finite()) {
                return Err(CurveError::NegativeDispersion(p.std_error));
            }
            if p.seed_count == 0 {
                return Err(CurveError::ZeroSeeds);
            }
        }
        Ok(Self {
            method: method.into(),
            task: task.into(),
            points,
        })
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn n_grid(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.n).collect()
    }
}

/// A learning-curve point after calibration against the control baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedPoint {
    pub n: u64,
    pub cr: CalibratedRisk,
    /// Seed dispersion rescaled by the calibration slope, when known.
    pub dispersion: Option<f64>,
}

/// A calibrated learning curve: blind guess maps to 1, maximal supervision
/// to 0. Values outside [0, 1] are meaningful and preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedCurve {
    method: String,
    task: String,
    points: Vec<CalibratedPoint>,
}

impl CalibratedCurve {
    pub fn new(
        method: impl Into<String>,
        task: impl Into<String>,
        points: Vec<CalibratedPoint>,
    ) -> Result<Self, CurveError> {
        validate_grid(points.iter().map(|p| p.n))?;
        for p in &points {
            if let Some(d) = p.dispersion {
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(CurveError::NegativeDispersion(d));
                }
            }
        }
        Ok(Self {
            method: method.into(),
            task: task.into(),
            points,
        })
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    pub fn points(&self) -> &[CalibratedPoint] {
        &self.points
    }

    pub fn n_grid(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.n).collect()
    }

    /// Calibrated risk at an exact measured regime, if present.
    pub fn at(&self, n: u64) -> Option<CalibratedRisk> {
        self.points.iter().find(|p| p.n == n).map(|p| p.cr)
    }

    /// True when both curves are measured on the identical n grid.
    pub fn same_grid(&self, other: &CalibratedCurve) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(other.points.iter())
                .all(|(a, b)| a.n == b.n)
    }
}

fn validate_grid(ns: impl Iterator<Item = u64>) -> Result<(), CurveError> {
    let mut prev: Option<u64> = None;
    let mut any = false;
    for n in ns {
        any = true;
        if n == 0 {
            return Err(CurveError::ZeroN);
        }
        if let Some(p) = prev {
            if n <= p {
                return Err(CurveError::NonAscendingN { prev: p, n });
            }
        }
        prev = Some(n);
    }
    if !any {
        return Err(CurveError::Empty);
    }
    Ok(())
}
