//! Blind-guess control baselines and empirical-risk evaluation.
//!
//! The blind guess is the best input-agnostic constant prediction under the
//! task loss: the most-represented class for the 0-1 loss, the elementwise
//! median for L1, and the elementwise mean for L2. Its risk anchors the top
//! of the calibrated scale, so both the guess and the risk evaluation must
//! use the same loss.
//!
//! Dense labels (e.g. per-pixel regression targets) can be too large to hold
//! every sample in memory at once; [`elementwise_blind_guess`] computes exact
//! per-element statistics in element chunks sized to a caller-provided byte
//! budget. The result is bit-identical regardless of the chunk size because
//! an element column is never split across chunks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metrics::Risk;

#[derive(Debug, Error)]
pub enum BaselinesError {
    #[error("label collection is empty")]
    EmptyCollection,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite label value {value} at sample {sample}, element {element}")]
    NonFiniteLabel {
        value: f64,
        sample: u64,
        element: u64,
    },
    #[error("{loss} loss is not applicable to {labels} labels")]
    LossMismatch {
        loss: LossKind,
        labels: &'static str,
    },
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error(
        "memory budget of {budget} bytes cannot hold one element column across all samples ({required} bytes)"
    )]
    BudgetTooSmall { required: u64, budget: u64 },
    #[error("risk evaluation produced a non-finite value")]
    NonFiniteRisk,
    #[error("label source error: {0}")]
    Source(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The task loss; selects both the blind-guess closed form and how empirical
/// risk is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Misclassification rate over class indices.
    ZeroOne,
    /// Mean absolute error, averaged over elements and samples.
    L1,
    /// Mean squared error, averaged over elements and samples.
    L2,
}

impl LossKind {
    pub fn parse(s: &str) -> Option<LossKind> {
        match s {
            "zero-one" | "zero_one" | "01" => Some(LossKind::ZeroOne),
            "l1" => Some(LossKind::L1),
            "l2" => Some(LossKind::L2),
            _ => None,
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::ZeroOne => write!(f, "zero-one"),
            LossKind::L1 => write!(f, "l1"),
            LossKind::L2 => write!(f, "l2"),
        }
    }
}

/// In-memory dense labels: `sample_count` samples of a fixed-dimension
/// numeric array, stored sample-major. Rank 0 (empty `dims`) means scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLabels {
    dims: Vec<u32>,
    values: Vec<f64>,
    elements: usize,
}

impl DenseLabels {
    pub fn new(dims: Vec<u32>, values: Vec<f64>) -> Result<Self, BaselinesError> {
        let elements = element_count(&dims)?;
        if !values.len().is_multiple_of(elements) {
            return Err(BaselinesError::ShapeMismatch(format!(
                "{} values do not divide into samples of {} elements",
                values.len(),
                elements
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(BaselinesError::NonFiniteLabel {
                    value: v,
                    sample: (i / elements) as u64,
                    element: (i % elements) as u64,
                });
            }
        }
        Ok(Self {
            dims,
            values,
            elements,
        })
    }

    pub fn scalars(values: Vec<f64>) -> Result<Self, BaselinesError> {
        Self::new(Vec::new(), values)
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn sample_count(&self) -> usize {
        self.values.len() / self.elements
    }

    pub fn elements_per_sample(&self) -> usize {
        self.elements
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.values[i * self.elements..(i + 1) * self.elements]
    }

    /// Views these labels as a streaming source for the chunked statistics.
    pub fn source(&self) -> InMemorySource<'_> {
        InMemorySource(self)
    }
}

pub(crate) fn element_count(dims: &[u32]) -> Result<usize, BaselinesError> {
    let mut elements: u64 = 1;
    for &d in dims {
        if d == 0 {
            return Err(BaselinesError::ShapeMismatch(
                "label dimensions must be positive".into(),
            ));
        }
        elements = elements
            .checked_mul(u64::from(d))
            .ok_or_else(|| BaselinesError::ShapeMismatch("label shape overflows".into()))?;
    }
    usize::try_from(elements)
        .map_err(|_| BaselinesError::ShapeMismatch("label shape overflows".into()))
}

/// A collection of per-sample labels sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    /// Class indices for classification tasks.
    Classes(Vec<u64>),
    /// Dense numeric arrays (scalars, vectors, images, ...).
    Dense(DenseLabels),
}

impl Labels {
    pub fn count(&self) -> usize {
        match self {
            Labels::Classes(c) => c.len(),
            Labels::Dense(d) => d.sample_count(),
        }
    }
}

/// A single constant prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Class(u64),
    Dense { dims: Vec<u32>, values: Vec<f64> },
}

/// Model outputs to score: either one constant applied to every sample or
/// one prediction per sample.
#[derive(Debug, Clone, Copy)]
pub enum Predictions<'a> {
    Constant(&'a Prediction),
    PerSample(&'a [Prediction]),
}

/// The best constant prediction found for a label collection.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindGuess {
    pub prediction: Prediction,
    pub loss: LossKind,
}

/// Mean per-sample loss of the predictions over the label collection.
pub fn empirical_risk(
    predictions: Predictions<'_>,
    labels: &Labels,
    loss: LossKind,
) -> Result<Risk, BaselinesError> {
    let count = labels.count();
    if count == 0 {
        return Err(BaselinesError::EmptyCollection);
    }
    if let Predictions::PerSample(preds) = predictions {
        if preds.len() != count {
            return Err(BaselinesError::ShapeMismatch(format!(
                "{} predictions for {} samples",
                preds.len(),
                count
            )));
        }
    }
    let total = match (loss, labels) {
        (LossKind::ZeroOne, Labels::Classes(classes)) => {
            let mut miss = 0u64;
            for (i, &label) in classes.iter().enumerate() {
                let predicted = match predictions {
                    Predictions::Constant(p) => class_of(p)?,
                    Predictions::PerSample(ps) => class_of(&ps[i])?,
                };
                if predicted != label {
                    miss += 1;
                }
            }
            miss as f64 / count as f64
        }
        (LossKind::L1 | LossKind::L2, Labels::Dense(dense)) => {
            let mut sum = 0.0;
            for i in 0..count {
                let target = dense.sample(i);
                let pred = match predictions {
                    Predictions::Constant(p) => dense_of(p, dense.dims())?,
                    Predictions::PerSample(ps) => dense_of(&ps[i], dense.dims())?,
                };
                for (p, y) in pred.iter().zip(target.iter()) {
                    let d = p - y;
                    sum += if loss == LossKind::L1 { d.abs() } else { d * d };
                }
            }
            sum / (count as f64 * dense.elements_per_sample() as f64)
        }
        (LossKind::ZeroOne, Labels::Dense(_)) => {
            return Err(BaselinesError::LossMismatch {
                loss,
                labels: "dense",
            })
        }
        (_, Labels::Classes(_)) => {
            return Err(BaselinesError::LossMismatch {
                loss,
                labels: "class",
            })
        }
    };
    Risk::new(total).map_err(|_| BaselinesError::NonFiniteRisk)
}

fn class_of(p: &Prediction) -> Result<u64, BaselinesError> {
    match p {
        Prediction::Class(c) => Ok(*c),
        Prediction::Dense { .. } => Err(BaselinesError::ShapeMismatch(
            "dense prediction scored against class labels".into(),
        )),
    }
}

fn dense_of<'a>(p: &'a Prediction, dims: &[u32]) -> Result<&'a [f64], BaselinesError> {
    match p {
        Prediction::Dense {
            dims: pdims,
            values,
        } => {
            if pdims != dims {
                return Err(BaselinesError::ShapeMismatch(format!(
                    "prediction shape {:?} does not match label shape {:?}",
                    pdims, dims
                )));
            }
            Ok(values)
        }
        Prediction::Class(_) => Err(BaselinesError::ShapeMismatch(
            "class prediction scored against dense labels".into(),
        )),
    }
}

/// Computes the loss-specific optimal constant prediction.
///
/// 0-1 loss: the most-represented class, ties broken by the smallest class
/// index. L1: elementwise median, even counts taking the lower middle value.
/// L2: elementwise mean.
pub fn blind_guess(labels: &Labels, loss: LossKind) -> Result<BlindGuess, BaselinesError> {
    if labels.count() == 0 {
        return Err(BaselinesError::EmptyCollection);
    }
    match (loss, labels) {
        (LossKind::ZeroOne, Labels::Classes(classes)) => {
            let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
            for &c in classes {
                *counts.entry(c).or_insert(0) += 1;
            }
            // BTreeMap iterates by class index, so the first maximum is the
            // smallest tied class.
            let (&best, _) = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .expect("non-empty counts");
            Ok(BlindGuess {
                prediction: Prediction::Class(best),
                loss,
            })
        }
        (LossKind::L1 | LossKind::L2, Labels::Dense(dense)) => {
            elementwise_blind_guess(&mut dense.source(), loss, u64::MAX)
        }
        (LossKind::ZeroOne, Labels::Dense(_)) => Err(BaselinesError::LossMismatch {
            loss,
            labels: "dense",
        }),
        (_, Labels::Classes(_)) => Err(BaselinesError::LossMismatch {
            loss,
            labels: "class",
        }),
    }
}

/// Streaming access to dense labels, chunked by element rather than by
/// sample so exact per-element statistics fit a fixed memory budget.
pub trait DenseLabelSource {
    fn sample_count(&self) -> u64;

    fn dims(&self) -> &[u32];

    fn elements_per_sample(&self) -> u64 {
        self.dims().iter().map(|&d| u64::from(d)).product::<u64>().max(1)
    }

    /// Fills `out[0..count * samples]` element-major: entry `e * samples + s`
    /// holds element `first + e` of sample `s`.
    fn read_element_block(
        &mut self,
        first: u64,
        count: u64,
        out: &mut [f64],
    ) -> Result<(), BaselinesError>;
}

/// [`DenseLabelSource`] over in-memory labels.
pub struct InMemorySource<'a>(&'a DenseLabels);

impl DenseLabelSource for InMemorySource<'_> {
    fn sample_count(&self) -> u64 {
        self.0.sample_count() as u64
    }

    fn dims(&self) -> &[u32] {
        self.0.dims()
    }

    fn read_element_block(
        &mut self,
        first: u64,
        count: u64,
        out: &mut [f64],
    ) -> Result<(), BaselinesError> {
        let samples = self.0.sample_count();
        for s in 0..samples {
            let sample = self.0.sample(s);
            for e in 0..count as usize {
                out[e * samples + s] = sample[first as usize + e];
            }
        }
        Ok(())
    }
}

/// Exact per-element median (L1) or mean (L2) over all samples, visiting the
/// data in element chunks of at most `memory_budget` bytes of resident label
/// values. The output does not depend on the chunk size.
pub fn elementwise_blind_guess(
    source: &mut dyn DenseLabelSource,
    loss: LossKind,
    memory_budget: u64,
) -> Result<BlindGuess, BaselinesError> {
    if loss == LossKind::ZeroOne {
        return Err(BaselinesError::LossMismatch {
            loss,
            labels: "dense",
        });
    }
    let samples = source.sample_count();
    if samples == 0 {
        return Err(BaselinesError::EmptyCollection);
    }
    let elements = source.elements_per_sample();
    let column_bytes = samples
        .checked_mul(std::mem::size_of::<f64>() as u64)
        .ok_or_else(|| BaselinesError::ShapeMismatch("sample count overflows".into()))?;
    if column_bytes > memory_budget {
        return Err(BaselinesError::BudgetTooSmall {
            required: column_bytes,
            budget: memory_budget,
        });
    }
    let chunk_len = (memory_budget / column_bytes).min(elements).max(1);
    let mut buf = vec![0.0f64; (chunk_len * samples) as usize];
    let mut prediction = Vec::with_capacity(elements as usize);
    let mut first = 0u64;
    while first < elements {
        let count = chunk_len.min(elements - first);
        let block = &mut buf[..(count * samples) as usize];
        source.read_element_block(first, count, block)?;
        for e in 0..count as usize {
            let column = &mut block[e * samples as usize..(e + 1) * samples as usize];
            for (s, &v) in column.iter().enumerate() {
                if !v.is_finite() {
                    return Err(BaselinesError::NonFiniteLabel {
                        value: v,
                        sample: s as u64,
                        element: first + e as u64,
                    });
                }
            }
            let value = match loss {
                LossKind::L1 => {
                    column.sort_by(f64::total_cmp);
                    // Lower middle for even counts: a true L1 minimizer that
                    // stays inside the observed value set.
                    column[(column.len() - 1) / 2]
                }
                LossKind::L2 => column.iter().sum::<f64>() / samples as f64,
                LossKind::ZeroOne => unreachable!(),
            };
            prediction.push(value);
        }
        first += count;
    }
    Ok(BlindGuess {
        prediction: Prediction::Dense {
            dims: source.dims().to_vec(),
            values: prediction,
        },
        loss,
    })
}

/// Exhaustive argmin over an explicit candidate set; ties broken by
/// candidate order. Serves as the model-free oracle for the closed forms.
pub fn brute_force_blind(
    labels: &Labels,
    loss: LossKind,
    candidates: &[Prediction],
) -> Result<BlindGuess, BaselinesError> {
    if candidates.is_empty() {
        return Err(BaselinesError::EmptyCandidates);
    }
    let mut best: Option<(f64, &Prediction)> = None;
    for candidate in candidates {
        let risk = empirical_risk(Predictions::Constant(candidate), labels, loss)?.value();
        match best {
            Some((current, _)) if risk >= current => {}
            _ => best = Some((risk, candidate)),
        }
    }
    let (_, prediction) = best.expect("non-empty candidates");
    Ok(BlindGuess {
        prediction: prediction.clone(),
        loss,
    })
}
