//! Synthetic learning curves and independent numerical oracles.
//!
//! The canonical synthetic family is a power law with offset,
//!
//! ```text
//! R(n) = r_max + (r_blind - r_max) * (1 + n/n0)^(-alpha)
//! ```
//!
//! which starts at the blind-guess level for n = 0 and decays monotonically
//! toward the maximal-supervision level, so it exercises the whole calibrated
//! scale. Calibrating a noiseless curve of this family gives exactly
//! `(1 + n/n0)^(-alpha)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::curves::{CalibratedCurve, CurvePoint, LearningCurve};
use crate::metrics::{MetricsError, Risk};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid regimes: {0}")]
    InvalidRegimes(String),
    #[error("refinement must be at least 1")]
    InvalidRefinement,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Parameters of the synthetic power-law learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawModel {
    r_blind: f64,
    r_max: f64,
    n0: f64,
    alpha: f64,
    noise_sigma: f64,
    rng_seed: u64,
}

impl PowerLawModel {
    pub fn new(
        r_blind: Risk,
        r_max: Risk,
        n0: f64,
        alpha: f64,
        noise_sigma: f64,
        rng_seed: u64,
    ) -> Result<Self, SynthError> {
        if r_blind.value() <= r_max.value() {
            return Err(SynthError::InvalidModel(format!(
                "blind risk {} must exceed max-supervision risk {}",
                r_blind.value(),
                r_max.value()
            )));
        }
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "half-saturation scale n0 must be positive, got {n0}"
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "decay exponent alpha must be positive, got {alpha}"
            )));
        }
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "noise sigma must be non-negative, got {noise_sigma}"
            )));
        }
        Ok(Self {
            r_blind: r_blind.value(),
            r_max: r_max.value(),
            n0,
            alpha,
            noise_sigma,
            rng_seed,
        })
    }

    pub fn r_blind(&self) -> f64 {
        self.r_blind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Noiseless curve value at regime n.
    pub fn evaluate(&self, n: u64) -> f64 {
        self.r_max + (self.r_blind - self.r_max) * self.decay(n)
    }

    /// The calibrated value of the noiseless curve: `(1 + n/n0)^(-alpha)`.
    pub fn decay(&self, n: u64) -> f64 {
        (1.0 + n as f64 / self.n0).powf(-self.alpha)
    }

    /// A copy with a different seed, for generating independent repeats.
    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self.clone() }
    }

    /// A copy whose effective sample size is multiplied by `boost`,
    /// modelling the sample-efficiency gain of a pre-trained model. Within
    /// the power-law family this is a rescaled half-saturation scale.
    pub fn with_sample_boost(&self, boost: f64) -> Result<Self, SynthError> {
        if !(boost.is_finite() && boost > 0.0) {
            return Err(SynthError::InvalidModel(format!(
                "sample boost must be positive, got {boost}"
            )));
        }
        Ok(Self {
            n0: self.n0 / boost,
            ..self.clone()
        })
    }
}

/// Samples the model at the given regimes, adding seeded gaussian noise in
/// raw risk space. Identical seeds produce identical curves.
pub fn power_law_curve(
    model: &PowerLawModel,
    regimes: &[u64],
) -> Result<LearningCurve, SynthError> {
    if regimes.is_empty() {
        return Err(SynthError::InvalidRegimes("no regimes given".into()));
    }
    for window in regimes.windows(2) {
        if window[1] <= window[0] {
            return Err(SynthError::InvalidRegimes(format!(
                "regimes must be strictly increasing ({} follows {})",
                window[1], window[0]
            )));
        }
    }
    if regimes[0] == 0 {
        return Err(SynthError::InvalidRegimes("regimes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);
    let noise = if model.noise_sigma > 0.0 {
        Some(Normal::new(0.0, model.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut points = Vec::with_capacity(regimes.len());
    for &n in regimes {
        let mut value = model.evaluate(n);
        if let Some(dist) = &noise {
            value += dist.sample(&mut rng);
        }
        points.push(CurvePoint {
            n,
            risk: Risk::new(value)
                .map_err(|_| SynthError::InvalidModel("noise produced a non-finite risk".into()))?,
            std_error: 0.0,
            seed_count: 1,
        });
    }
    Ok(LearningCurve::new("synthetic", "synthetic", points)
        .expect("validated regimes form a valid grid"))
}

/// Derives a per-stream seed from a base seed (SplitMix64 finalizer), so
/// repeated curves get decorrelated noise while staying reproducible.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reference quadrature for the cumulative-improvement metric: the same
/// parametric trapezoid integral, evaluated after linearly subdividing each
/// segment `refinement` times. Refinement 1 reproduces the metric bit for
/// bit; trapezoids are exact on linear segments, so any refinement agrees up
/// to rounding. The normalizer uses the original grid extremes.
pub fn cci_quadrature_oracle(
    curve_f: &CalibratedCurve,
    curve_scratch: &CalibratedCurve,
    refinement: u32,
) -> Result<f64, SynthError> {
    if refinement == 0 {
        return Err(SynthError::InvalidRefinement);
    }
    if !curve_f.same_grid(curve_scratch) {
        return Err(SynthError::Metrics(MetricsError::GridMismatch));
    }
    let xs: Vec<f64> = curve_scratch.points().iter().map(|p| p.cr.value()).collect();
    let ys: Vec<f64> = curve_f.points().iter().map(|p| p.cr.value()).collect();
    let normalizer = crate::metrics::diagonal_normalizer(&xs);
    if normalizer == 0.0 {
        return Err(SynthError::Metrics(MetricsError::DegenerateRange));
    }
    let r = refinement as usize;
    let mut area = 0.0;
    for i in 0..xs.len().saturating_sub(1) {
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (y0, y1) = (ys[i], ys[i + 1]);
        let at = |k: usize, lo: f64, hi: f64| -> f64 {
            if k == 0 {
                lo
            } else if k == r {
                hi
            } else {
                lo + (k as f64 / r as f64) * (hi - lo)
            }
        };
        for k in 0..r {
            let (px0, px1) = (at(k, x0, x1), at(k + 1, x0, x1));
            let (py0, py1) = (at(k, y0, y1), at(k + 1, y0, y1));
            area += (px1 - px0) * ((px0 - py0) + (px1 - py1)) / 2.0;
        }
    }
    Ok(area / normalizer)
}
