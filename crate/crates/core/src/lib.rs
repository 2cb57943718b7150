//! Control-baseline calibration for transfer-learning evaluations.
//!
//! Evaluating a pre-training method by its raw test loss hides how much of
//! that number comes from dataset regularities, architectural inductive bias,
//! or an irreducible performance ceiling. This crate rescales empirical risks
//! against three control baselines so that results become comparable across
//! tasks and loss functions:
//!
//! * **blind guess** — the best constant prediction (majority class, median,
//!   or mean depending on the loss); anchors calibrated risk 1,
//! * **maximal supervision** — a model trained with abundant labels;
//!   anchors calibrated risk 0,
//! * **scratch** — a model trained on the transfer set alone, used as the
//!   reference for relative improvement and the cumulative-improvement area
//!   metric (CCI).
//!
//! The crate covers the full desk-side pipeline: parsing experiment logs,
//! computing blind-guess baselines from label files, aggregating seeds into
//! learning curves, calibrating, validating data-regime coverage, and
//! rendering deterministic SVG plots and tables. The `transfer-calib` binary
//! in the companion CLI crate exposes all of it as subcommands.

pub mod baselines;
pub mod curves;
pub mod ingest;
pub mod labels;
pub mod metrics;
pub mod report;
pub mod synth;

pub use curves::{CalibratedCurve, CalibratedPoint, CurvePoint, LearningCurve};
pub use metrics::{BaselineSet, CalibratedRisk, Risk};
