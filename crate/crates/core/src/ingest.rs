//! Experiment-log and baseline-file parsing, seed aggregation, and
//! data-regime coverage validation.
//!
//! Logs are flat records `(method, task, n, seed, risk)` in either CSV
//! (header `method,task,n,seed,risk`) or JSON lines (one object per line with
//! the same keys). Baselines come as CSV with header
//! `task,blind_risk,max_risk` and are validated at parse time.
//!
//! The scratch control is identified by the reserved method name
//! [`SCRATCH_METHOD`].

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::curves::{CalibratedCurve, CurvePoint, LearningCurve};
use crate::metrics::{BaselineSet, CalibratedRisk, Risk};

/// Reserved method name for the scratch control baseline.
pub const SCRATCH_METHOD: &str = "scratch";

/// Default coverage thresholds: the smallest regime should leave scratch
/// close to the blind-guess level and the largest should bring it close to
/// the maximal-supervision level.
pub const DEFAULT_LOW_THRESHOLD: f64 = 0.8;
pub const DEFAULT_HIGH_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: duplicate record for {key}")]
    DuplicateRecord { row: usize, key: String },
    #[error("unknown field '{name}'")]
    UnknownField { name: String },
    #[error("row {row}: task '{task}' has degenerate baselines (blind {blind} <= max {max})")]
    DegenerateBaselines {
        row: usize,
        task: String,
        blind: f64,
        max: f64,
    },
    #[error("row {row}: duplicate task '{task}'")]
    DuplicateTask { row: usize, task: String },
}

/// One measured empirical risk from an experiment log.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskRecord {
    pub method: String,
    pub task: String,
    pub n: u64,
    pub seed: i64,
    pub risk: Risk,
}

/// Controls how strictly documents are parsed.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Reject fields outside the schema. On by default.
    pub strict_fields: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            strict_fields: true,
        }
    }
}

const LOG_FIELDS: [&str; 5] = ["method", "task", "n", "seed", "risk"];

/// Parses an experiment log, detecting CSV vs JSON lines from the first
/// non-whitespace character.
pub fn parse_log(document: &str, options: &ParseOptions) -> Result<Vec<RiskRecord>, IngestError> {
    if document.trim_start().starts_with('{') {
        parse_log_jsonl(document, options)
    } else {
        parse_log_csv(document, options)
    }
}

pub fn parse_log_csv(
    document: &str,
    options: &ParseOptions,
) -> Result<Vec<RiskRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(document.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let mut columns: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, name) in headers.iter().enumerate() {
        if LOG_FIELDS.contains(&name) {
            if columns.insert(name, i).is_some() {
                return Err(IngestError::MalformedRow {
                    row: 0,
                    reason: format!("duplicate column '{name}'"),
                });
            }
        } else if options.strict_fields {
            return Err(IngestError::UnknownField { name: name.into() });
        }
    }
    for field in LOG_FIELDS {
        if !columns.contains_key(field) {
            return Err(IngestError::MalformedRow {
                row: 0,
                reason: format!("missing column '{field}'"),
            });
        }
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |name: &str| -> &str { record.get(columns[name]).unwrap_or("") };
        let rec = RiskRecord {
            method: field("method").to_string(),
            task: field("task").to_string(),
            n: parse_n(field("n"), row)?,
            seed: parse_seed(field("seed"), row)?,
            risk: parse_risk(field("risk"), row)?,
        };
        push_unique(&mut records, &mut seen, rec, row)?;
    }
    Ok(records)
}

pub fn parse_log_jsonl(
    document: &str,
    options: &ParseOptions,
) -> Result<Vec<RiskRecord>, IngestError> {
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in document.lines().enumerate() {
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| IngestError::MalformedRow {
                row,
                reason: e.to_string(),
            })?;
        let object = value.as_object().ok_or_else(|| IngestError::MalformedRow {
            row,
            reason: "line is not a JSON object".into(),
        })?;
        if options.strict_fields {
            for key in object.keys() {
                if !LOG_FIELDS.contains(&key.as_str()) {
                    return Err(IngestError::UnknownField { name: key.clone() });
                }
            }
        }
        let str_field = |name: &str| -> Result<String, IngestError> {
            object
                .get(name)
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .ok_or_else(|| IngestError::MalformedRow {
                    row,
                    reason: format!("missing or non-string field '{name}'"),
                })
        };
        let n = object
            .get("n")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| IngestError::MalformedRow {
                row,
                reason: "field 'n' must be a positive integer".into(),
            })?;
        if n == 0 {
            return Err(IngestError::MalformedRow {
                row,
                reason: "field 'n' must be positive".into(),
            });
        }
        let seed = object
            .get("seed")
            .and_then(|v| v.as_i64())
            .ok_or_else(|| IngestError::MalformedRow {
                row,
                reason: "field 'seed' must be an integer".into(),
            })?;
        let risk_value = object
            .get("risk")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| IngestError::MalformedRow {
                row,
                reason: "field 'risk' must be a number".into(),
            })?;
        let rec = RiskRecord {
            method: str_field("method")?,
            task: str_field("task")?,
            n,
            seed,
            risk: Risk::new(risk_value).map_err(|_| IngestError::MalformedRow {
                row,
                reason: format!("risk value {risk_value} is not finite"),
            })?,
        };
        push_unique(&mut records, &mut seen, rec, row)?;
    }
    Ok(records)
}

fn push_unique(
    records: &mut Vec<RiskRecord>,
    seen: &mut BTreeSet<(String, String, u64, i64)>,
    rec: RiskRecord,
    row: usize,
) -> Result<(), IngestError> {
    let key = (rec.method.clone(), rec.task.clone(), rec.n, rec.seed);
    if !seen.insert(key) {
        return Err(IngestError::DuplicateRecord {
            row,
            key: format!(
                "(method={}, task={}, n={}, seed={})",
                rec.method, rec.task, rec.n, rec.seed
            ),
        });
    }
    records.push(rec);
    Ok(())
}

fn parse_n(field: &str, row: usize) -> Result<u64, IngestError> {
    let n: u64 = field.trim().parse().map_err(|e| IngestError::MalformedRow {
        row,
        reason: format!("bad n '{field}': {e}"),
    })?;
    if n == 0 {
        return Err(IngestError::MalformedRow {
            row,
            reason: "field 'n' must be positive".into(),
        });
    }
    Ok(n)
}

fn parse_seed(field: &str, row: usize) -> Result<i64, IngestError> {
    field.trim().parse().map_err(|e| IngestError::MalformedRow {
        row,
        reason: format!("bad seed '{field}': {e}"),
    })
}

fn parse_risk(field: &str, row: usize) -> Result<Risk, IngestError> {
    let value: f64 = field.trim().parse().map_err(|e| IngestError::MalformedRow {
        row,
        reason: format!("bad risk '{field}': {e}"),
    })?;
    Risk::new(value).map_err(|_| IngestError::MalformedRow {
        row,
        reason: format!("risk value {value} is not finite"),
    })
}

/// Serializes records to the log CSV format. Floats use the shortest
/// representation that round-trips, so parse(serialize(parse(d))) is an
/// identity.
pub fn serialize_log_csv(records: &[RiskRecord]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(LOG_FIELDS)
        .expect("in-memory write cannot fail");
    for rec in records {
        writer
            .write_record([
                rec.method.as_str(),
                rec.task.as_str(),
                &rec.n.to_string(),
                &rec.seed.to_string(),
                &rec.risk.value().to_string(),
            ])
            .expect("in-memory write cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush cannot fail"))
        .expect("CSV output is UTF-8")
}

#[derive(Serialize)]
struct RecordJson<'a> {
    method: &'a str,
    task: &'a str,
    n: u64,
    seed: i64,
    risk: f64,
}

/// Serializes records to the JSON-lines log format.
pub fn serialize_log_jsonl(records: &[RiskRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        let line = serde_json::to_string(&RecordJson {
            method: &rec.method,
            task: &rec.task,
            n: rec.n,
            seed: rec.seed,
            risk: rec.risk.value(),
        })
        .expect("record serialization cannot fail");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses a baselines CSV (`task,blind_risk,max_risk`), validating that each
/// task's blind-guess risk strictly exceeds its maximal-supervision risk.
pub fn parse_baselines_csv(document: &str) -> Result<Vec<BaselineSet>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(document.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::MalformedRow {
            row: 0,
            reason: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["task", "blind_risk", "max_risk"] {
        return Err(IngestError::MalformedRow {
            row: 0,
            reason: format!(
                "header must be 'task,blind_risk,max_risk', got '{}'",
                names.join(",")
            ),
        });
    }
    let mut sets = Vec::new();
    let mut tasks = BTreeSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let task = record.get(0).unwrap_or("").to_string();
        let blind = parse_risk(record.get(1).unwrap_or(""), row)?;
        let max = parse_risk(record.get(2).unwrap_or(""), row)?;
        if !tasks.insert(task.clone()) {
            return Err(IngestError::DuplicateTask { row, task });
        }
        let set = BaselineSet::new(task.clone(), blind, max).map_err(|_| {
            IngestError::DegenerateBaselines {
                row,
                task,
                blind: blind.value(),
                max: max.value(),
            }
        })?;
        sets.push(set);
    }
    Ok(sets)
}

/// Serializes baselines to their CSV format.
pub fn serialize_baselines_csv(sets: &[BaselineSet]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(["task", "blind_risk", "max_risk"])
        .expect("in-memory write cannot fail");
    for set in sets {
        writer
            .write_record([
                set.task(),
                &set.blind().value().to_string(),
                &set.max_supervision().value().to_string(),
            ])
            .expect("in-memory write cannot fail");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush cannot fail"))
        .expect("CSV output is UTF-8")
}

/// Groups records by (method, task) and aggregates seeds per regime into a
/// mean and standard error. Points are sorted by n; curves by (task, method).
///
/// Seeds are summed in seed order, so the result does not depend on record
/// order in the log.
pub fn aggregate(records: &[RiskRecord]) -> Vec<LearningCurve> {
    // (task, method) -> n -> (seed, risk)
    type Groups = BTreeMap<(String, String), BTreeMap<u64, Vec<(i64, f64)>>>;
    let mut groups = Groups::new();
    for rec in records {
        groups
            .entry((rec.task.clone(), rec.method.clone()))
            .or_default()
            .entry(rec.n)
            .or_default()
            .push((rec.seed, rec.risk.value()));
    }
    let mut curves = Vec::with_capacity(groups.len());
    for ((task, method), by_n) in groups {
        let mut points = Vec::with_capacity(by_n.len());
        for (n, mut risks) in by_n {
            risks.sort_by_key(|&(seed, _)| seed);
            let k = risks.len();
            let mean = risks.iter().map(|&(_, r)| r).sum::<f64>() / k as f64;
            let std_error = if k > 1 {
                let ss = risks
                    .iter()
                    .map(|&(_, r)| (r - mean) * (r - mean))
                    .sum::<f64>();
                (ss / (k - 1) as f64).sqrt() / (k as f64).sqrt()
            } else {
                0.0
            };
            points.push(CurvePoint {
                n,
                risk: Risk::new(mean).expect("mean of finite risks is finite"),
                std_error,
                seed_count: k as u32,
            });
        }
        curves.push(
            LearningCurve::new(method, task, points)
                .expect("aggregation produces a valid grid"),
        );
    }
    curves
}

/// Coverage diagnosis for one task's scratch curve.
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub task: String,
    /// Calibrated scratch risk at the smallest measured regime.
    pub low_end_cr: CalibratedRisk,
    /// Calibrated scratch risk at the largest measured regime.
    pub high_end_cr: CalibratedRisk,
    pub warnings: Vec<String>,
}

/// Checks that the measured regimes span the interesting range: scratch
/// should start close to the blind-guess level (calibrated risk at the
/// smallest n at least `low_threshold`) and end close to the
/// maximal-supervision level (at the largest n at most `high_threshold`).
pub fn validate_regimes(
    scratch_curve: &CalibratedCurve,
    low_threshold: f64,
    high_threshold: f64,
) -> RegimeReport {
    let points = scratch_curve.points();
    let first = points.first().expect("curves are non-empty");
    let last = points.last().expect("curves are non-empty");
    let mut warnings = Vec::new();
    if first.cr.value() < low_threshold {
        warnings.push(format!(
            "low-data regime starts too large: calibrated scratch risk {:.4} at n={} is below the low threshold {:.4}; smaller regimes are needed to observe the blind-guess level",
            first.cr.value(),
            first.n,
            low_threshold
        ));
    }
    if last.cr.value() > high_threshold {
        warnings.push(format!(
            "high-data regime stops too small: calibrated scratch risk {:.4} at n={} is above the high threshold {:.4}; larger regimes are needed to observe convergence toward maximal supervision",
            last.cr.value(),
            last.n,
            high_threshold
        ));
    }
    RegimeReport {
        task: scratch_curve.task().to_string(),
        low_end_cr: first.cr,
        high_end_cr: last.cr,
        warnings,
    }
}
