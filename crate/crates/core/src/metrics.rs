//! Calibration arithmetic.
//!
//! An empirical risk is mapped onto a dimensionless scale anchored by two
//! control baselines: the blind-guess risk (maps to 1) and the
//! maximal-supervision risk (maps to 0),
//!
//! ```text
//! cr = (r - r_max) / (r_blind - r_max)
//! ```
//!
//! The map is affine, so it is invariant under affine transformations of the
//! task loss. Values are deliberately not clamped: a calibrated risk below 0
//! means the measured model beat the maximal-supervision approximation, and
//! a value above 1 means it did worse than guessing blind.
//!
//! On top of calibration this module provides the relative improvement over
//! the scratch control and the cumulative-improvement area metric (CCI)
//! between a method curve and the scratch diagonal.

use thiserror::Error;

use crate::curves::{CalibratedCurve, CalibratedPoint, LearningCurve};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    /// Blind guess does not beat the supervised ceiling; the calibration
    /// denominator would be non-positive.
    #[error("degenerate baselines: blind-guess risk {blind} must strictly exceed maximal-supervision risk {max}")]
    DegenerateBaselines { blind: f64, max: f64 },
    #[error("non-finite input value {0}")]
    NonFiniteInput(f64),
    #[error("calibration produced a non-finite value")]
    NonFiniteResult,
    #[error("scratch calibrated risk is 0; relative improvement is undefined")]
    ScratchAtCeiling,
    #[error("curves are measured on different n grids")]
    GridMismatch,
    #[error("scratch calibrated range has zero normalizing area")]
    DegenerateRange,
    #[error("n={0} is not a measured regime on both curves")]
    UnknownRegime(u64),
}

/// An empirical risk in the loss's native units. Lower is better.
///
/// Always finite; NaN and infinities are rejected at construction so the
/// arithmetic downstream never sees them.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Risk(f64);

impl Risk {
    pub fn new(value: f64) -> Result<Self, MetricsError> {
        if !value.is_finite() {
            return Err(MetricsError::NonFiniteInput(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A dimensionless calibrated risk. May be negative or exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CalibratedRisk(f64);

impl CalibratedRisk {
    pub fn new(value: f64) -> Result<Self, MetricsError> {
        if !value.is_finite() {
            return Err(MetricsError::NonFiniteInput(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The two calibration anchors for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSet {
    task: String,
    blind: Risk,
    max_supervision: Risk,
}

impl BaselineSet {
    pub fn new(
        task: impl Into<String>,
        blind: Risk,
        max_supervision: Risk,
    ) -> Result<Self, MetricsError> {
        if blind.value() <= max_supervision.value() {
            return Err(MetricsError::DegenerateBaselines {
                blind: blind.value(),
                max: max_supervision.value(),
            });
        }
        Ok(Self {
            task: task.into(),
            blind,
            max_supervision,
        })
    }

    pub fn task(&self) -> &str {
        &self.task
    }

    pub fn blind(&self) -> Risk {
        self.blind
    }

    pub fn max_supervision(&self) -> Risk {
        self.max_supervision
    }

    /// The calibration denominator `r_blind - r_max`; strictly positive.
    pub fn span(&self) -> f64 {
        self.blind.value() - self.max_supervision.value()
    }
}

/// Result of the cumulative-improvement area metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CciResult {
    pub cci: f64,
    /// Extremes of the scratch calibrated risk over the measured regimes.
    pub x_range: (f64, f64),
    pub segment_count: usize,
}

/// Maps an empirical risk onto the calibrated scale.
///
/// Returns exactly 0 for `r = r_max` and exactly 1 for `r = r_blind`.
/// Out-of-range values pass through unclamped.
pub fn calibrate_risk(r: Risk, baselines: &BaselineSet) -> Result<CalibratedRisk, MetricsError> {
    let cr = (r.value() - baselines.max_supervision.value()) / baselines.span();
    if !cr.is_finite() {
        return Err(MetricsError::NonFiniteResult);
    }
    Ok(CalibratedRisk(cr))
}

/// Calibrates every point of a learning curve, preserving the n grid.
///
/// Seed dispersion is rescaled by the calibration slope `1 / (r_blind - r_max)`:
/// an affine map shifts a distribution but only its slope reshapes the spread.
pub fn calibrate_curve(
    curve: &LearningCurve,
    baselines: &BaselineSet,
) -> Result<CalibratedCurve, MetricsError> {
    let span = baselines.span();
    let mut points = Vec::with_capacity(curve.points().len());
    for p in curve.points() {
        let dispersion = p.std_error / span;
        if !dispersion.is_finite() {
            return Err(MetricsError::NonFiniteResult);
        }
        points.push(CalibratedPoint {
            n: p.n,
            cr: calibrate_risk(p.risk, baselines)?,
            dispersion: Some(dispersion),
        });
    }
    Ok(CalibratedCurve::new(curve.method(), curve.task(), points)
        .expect("calibration preserves curve invariants"))
}

/// Fraction of the scratch-to-ceiling gap closed by the method:
/// `(cr_scratch - cr_f) / cr_scratch`. Positive means better than scratch.
pub fn relative_improvement(
    cr_f: CalibratedRisk,
    cr_scratch: CalibratedRisk,
) -> Result<f64, MetricsError> {
    if cr_scratch.value() == 0.0 {
        return Err(MetricsError::ScratchAtCeiling);
    }
    Ok((cr_scratch.value() - cr_f.value()) / cr_scratch.value())
}

/// Cumulative improvement of a method over scratch, across all regimes.
///
/// With parametric points `(x_i, y_i) = (cr_scratch(n_i), cr_f(n_i))` ordered
/// by n, the signed area between the curve and the main diagonal is
///
/// ```text
/// A = sum_i (x_{i+1} - x_i) * ((x_i - y_i) + (x_{i+1} - y_{i+1})) / 2
/// ```
///
/// normalized by the area swept under the diagonal along the same traversal,
/// `N = integral of x dx = (x_last^2 - x_first^2) / 2`. Both integrals are
/// parametric in n, so a non-monotone scratch curve contributes signed
/// segments instead of being re-sorted, and the traversal orientation cancels
/// between numerator and denominator: a curve below the diagonal (better than
/// scratch) yields a positive value whether the scratch risk rises or falls
/// with n. For increasing scratch values N equals `(x_max^2 - x_min^2) / 2`
/// over the observed range.
pub fn cci(
    curve_f: &CalibratedCurve,
    curve_scratch: &CalibratedCurve,
) -> Result<CciResult, MetricsError> {
    if !curve_f.same_grid(curve_scratch) {
        return Err(MetricsError::GridMismatch);
    }
    let xs: Vec<f64> = curve_scratch.points().iter().map(|p| p.cr.value()).collect();
    let ys: Vec<f64> = curve_f.points().iter().map(|p| p.cr.value()).collect();
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let normalizer = diagonal_normalizer(&xs);
    if normalizer == 0.0 {
        return Err(MetricsError::DegenerateRange);
    }
    let area = signed_diagonal_area(&xs, &ys);
    Ok(CciResult {
        cci: area / normalizer,
        x_range: (x_min, x_max),
        segment_count: xs.len() - 1,
    })
}

/// Signed area under the diagonal along the parametric traversal; the
/// telescoped closed form of the trapezoid sum of `x dx`.
pub(crate) fn diagonal_normalizer(xs: &[f64]) -> f64 {
    let first = xs.first().copied().unwrap_or(0.0);
    let last = xs.last().copied().unwrap_or(0.0);
    (last * last - first * first) / 2.0
}

/// Trapezoid sum of `(x - y) dx` over consecutive parametric points.
pub(crate) fn signed_diagonal_area(xs: &[f64], ys: &[f64]) -> f64 {
    let mut area = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        area += (xs[i + 1] - xs[i]) * ((xs[i] - ys[i]) + (xs[i + 1] - ys[i + 1])) / 2.0;
    }
    area
}

/// Gap to scratch at a single measured regime: `cr_scratch(n) - cr_f(n)`.
pub fn delta_at(
    curve_f: &CalibratedCurve,
    curve_scratch: &CalibratedCurve,
    n: u64,
) -> Result<f64, MetricsError> {
    let f = curve_f.at(n).ok_or(MetricsError::UnknownRegime(n))?;
    let s = curve_scratch.at(n).ok_or(MetricsError::UnknownRegime(n))?;
    Ok(s.value() - f.value())
}
