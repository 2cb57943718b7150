//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Tolerances are pinned as constants next to
//! the checks they gate.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use transfer_calib::baselines::{
    blind_guess, brute_force_blind, elementwise_blind_guess, empirical_risk, DenseLabels, Labels,
    LossKind, Prediction, Predictions,
};
use transfer_calib::curves::{CalibratedCurve, CalibratedPoint};
use transfer_calib::ingest::{
    parse_log_csv, parse_log_jsonl, serialize_log_csv, serialize_log_jsonl, validate_regimes,
    ParseOptions, RiskRecord, DEFAULT_HIGH_THRESHOLD, DEFAULT_LOW_THRESHOLD,
};
use transfer_calib::labels::{write_tclb, LabelDtype, TclbReader};
use transfer_calib::metrics::{calibrate_curve, calibrate_risk, cci, BaselineSet, CalibratedRisk, Risk};
use transfer_calib::synth::{cci_quadrature_oracle, derive_seed, power_law_curve, PowerLawModel};

const EXACT: f64 = 0.0;
const AFFINE_REL_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-9;
const GRID_SLACK: f64 = 1e-9;
const CCI_DIAGONAL_TOL: f64 = 1e-15;
const CCI_ANALYTIC_TOL: f64 = 1e-12;
const CCI_QUADRATURE_TOL: f64 = 1e-4;
const POWER_LAW_REL_TOL: f64 = 1e-12;

const ANCHOR_BUDGET_MS: u128 = 1_000;
const ORACLE_BUDGET_MS: u128 = 30_000;
const PIPELINE_BUDGET_MS: u128 = 10_000;

/// Deterministic uniform in [0, 1) from a seed and stream index.
fn uniform(seed: u64, stream: u64) -> f64 {
    (derive_seed(seed, stream) >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform_in(seed: u64, stream: u64, lo: f64, hi: f64) -> f64 {
    lo + uniform(seed, stream) * (hi - lo)
}

fn risk(v: f64) -> Risk {
    Risk::new(v).unwrap()
}

fn baselines(blind: f64, max: f64) -> BaselineSet {
    BaselineSet::new("t", risk(blind), risk(max)).unwrap()
}

fn curve_from(method: &str, points: &[(u64, f64)]) -> CalibratedCurve {
    CalibratedCurve::new(
        method,
        "t",
        points
            .iter()
            .map(|&(n, cr)| CalibratedPoint {
                n,
                cr: CalibratedRisk::new(cr).unwrap(),
                dispersion: None,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn criterion_01_calibration_anchors() {
    let start = Instant::now();
    for i in 0..1000u64 {
        let max = uniform_in(1, 3 * i, -50.0, 50.0);
        let span = uniform_in(1, 3 * i + 1, 1e-3, 100.0);
        let b = baselines(max + span, max);
        assert_eq!(
            calibrate_risk(b.max_supervision(), &b).unwrap().value(),
            0.0 + EXACT
        );
        assert_eq!(calibrate_risk(b.blind(), &b).unwrap().value(), 1.0 + EXACT);
    }
    let elapsed = start.elapsed().as_millis();
    assert!(elapsed < ANCHOR_BUDGET_MS, "took {elapsed} ms");
    println!("criterion 01 PASS — calibration anchors exact on 1000 random triples ({elapsed} ms)");
}

#[test]
fn criterion_02_affine_invariance() {
    for i in 0..1000u64 {
        let s = 5 * i;
        let max = uniform_in(2, s, -3.0, 3.0);
        let span = uniform_in(2, s + 1, 2.0, 10.0);
        let r = max + uniform_in(2, s + 2, -0.2, 1.5) * span;
        let a = 10f64.powf(uniform_in(2, s + 3, -2.0, 2.0));
        let b = uniform_in(2, s + 4, -10.0, 10.0);
        let blind = max + span;

        let base = calibrate_risk(risk(r), &baselines(blind, max)).unwrap().value();
        let mapped = calibrate_risk(
            risk(a * r + b),
            &baselines(a * blind + b, a * max + b),
        )
        .unwrap()
        .value();
        let rel = (base - mapped).abs() / base.abs().max(mapped.abs()).max(1.0);
        assert!(rel <= AFFINE_REL_TOL, "a={a} b={b} base={base} mapped={mapped}");
    }
    println!("criterion 02 PASS — affine invariance within 1e-12 relative on 1000 random triples");
}

#[test]
fn criterion_03_thousand_class_toy() {
    // A strict majority with a 0.1% margin over the runners-up: class 0
    // appears 1000 times, each of the 999 other classes 999 times.
    let mut margin_labels = Vec::with_capacity(1000 + 999 * 999);
    margin_labels.extend(std::iter::repeat_n(0u64, 1000));
    for class in 1..1000u64 {
        margin_labels.extend(std::iter::repeat_n(class, 999));
    }
    let guess = blind_guess(&Labels::Classes(margin_labels), LossKind::ZeroOne).unwrap();
    assert_eq!(guess.prediction, Prediction::Class(0));

    // The exact arithmetic of the scenario: 1000 uniformly distributed
    // classes, so the blind guess errs 99.9% of the time while a 0.1-error
    // model is 900x more accurate.
    let uniform_labels: Vec<u64> = (0..1000u64).flat_map(|c| [c, c]).collect();
    let labels = Labels::Classes(uniform_labels);
    let guess = blind_guess(&labels, LossKind::ZeroOne).unwrap();
    assert_eq!(guess.prediction, Prediction::Class(0));
    let blind_risk =
        empirical_risk(Predictions::Constant(&guess.prediction), &labels, LossKind::ZeroOne)
            .unwrap()
            .value();
    assert_eq!(blind_risk, 0.999);

    let model_risk = 0.1;
    let accuracy_ratio = (1.0 - model_risk) / (1.0 - blind_risk);
    assert!(
        (accuracy_ratio - 900.0).abs() <= RATIO_TOL,
        "accuracy ratio {accuracy_ratio}"
    );

    let b = BaselineSet::new("toy", risk(blind_risk), risk(0.0)).unwrap();
    let cr = calibrate_risk(risk(model_risk), &b).unwrap().value();
    assert!((cr - 0.1 / 0.999).abs() <= 1e-15);
    assert_eq!(transfer_calib::report::format_fixed4(cr), "0.1001");
    println!(
        "criterion 03 PASS — 1000-class toy: majority class returned, 900x accuracy gap, calibrated risk 0.1001"
    );
}

#[test]
fn criterion_04_blind_guess_oracle_equivalence() {
    let start = Instant::now();

    for i in 0..200u64 {
        let len = 1 + (derive_seed(40, i) % 60) as usize;
        let classes: Vec<u64> = (0..len).map(|j| derive_seed(41, i * 64 + j as u64) % 10).collect();
        let labels = Labels::Classes(classes.clone());
        let guess = blind_guess(&labels, LossKind::ZeroOne).unwrap();
        let mut observed = classes;
        observed.sort_unstable();
        observed.dedup();
        let candidates: Vec<Prediction> = observed.into_iter().map(Prediction::Class).collect();
        let brute = brute_force_blind(&labels, LossKind::ZeroOne, &candidates).unwrap();
        let risk_of = |p: &Prediction| {
            empirical_risk(Predictions::Constant(p), &labels, LossKind::ZeroOne)
                .unwrap()
                .value()
        };
        assert_eq!(risk_of(&guess.prediction), risk_of(&brute.prediction));
    }

    for loss in [LossKind::L1, LossKind::L2] {
        for i in 0..200u64 {
            let len = 1 + (derive_seed(42, i) % 50) as usize;
            let values: Vec<f64> = (0..len)
                .map(|j| uniform_in(43, i * 64 + j as u64, 0.0, 2.0))
                .collect();
            let labels = Labels::Dense(DenseLabels::scalars(values.clone()).unwrap());
            let guess = blind_guess(&labels, loss).unwrap();
            let guess_risk =
                empirical_risk(Predictions::Constant(&guess.prediction), &labels, loss)
                    .unwrap()
                    .value();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let steps = ((hi - lo) / 1e-3).ceil() as usize;
            let candidates: Vec<Prediction> = (0..=steps)
                .map(|k| Prediction::Dense {
                    dims: vec![],
                    values: vec![(lo + k as f64 * 1e-3).min(hi)],
                })
                .collect();
            let brute = brute_force_blind(&labels, loss, &candidates).unwrap();
            let brute_risk =
                empirical_risk(Predictions::Constant(&brute.prediction), &labels, loss)
                    .unwrap()
                    .value();
            assert!(
                guess_risk <= brute_risk + GRID_SLACK,
                "{loss}: closed form {guess_risk} vs grid {brute_risk}"
            );
        }
    }

    let elapsed = start.elapsed().as_millis();
    assert!(elapsed < ORACLE_BUDGET_MS, "took {elapsed} ms");
    println!(
        "criterion 04 PASS — closed-form blind guesses beat 1e-3 grid search on 200 label sets per loss ({elapsed} ms)"
    );
}

#[test]
fn criterion_05_chunked_elementwise_median() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.tclb");
    let samples = 101usize;
    let dims = [64u32, 64];
    let elements = 64 * 64usize;
    let values: Vec<f64> = (0..samples * elements)
        .map(|i| uniform_in(50, i as u64, -10.0, 10.0))
        .collect();
    write_tclb(&path, &dims, LabelDtype::F64, &values, samples as u64).unwrap();

    // independent oracle: per-element sort over the in-memory values
    let mut oracle = Vec::with_capacity(elements);
    for e in 0..elements {
        let mut column: Vec<f64> = (0..samples).map(|s| values[s * elements + e]).collect();
        column.sort_by(f64::total_cmp);
        oracle.push(column[(samples - 1) / 2]);
    }

    let column_bytes = 8 * samples as u64;
    for budget in [column_bytes, 64 * 1024, 1 << 30] {
        let mut reader = TclbReader::open(&path).unwrap();
        let guess = elementwise_blind_guess(&mut reader, LossKind::L1, budget).unwrap();
        match &guess.prediction {
            Prediction::Dense { dims: d, values: got } => {
                assert_eq!(d, &vec![64, 64]);
                assert_eq!(got.len(), oracle.len());
                for (a, b) in got.iter().zip(oracle.iter()) {
                    assert_eq!(a.to_bits(), b.to_bits(), "budget {budget}");
                }
            }
            _ => panic!("expected dense prediction"),
        }
    }
    println!(
        "criterion 05 PASS — chunked 64x64 medians bit-identical to the sort oracle at 3 budgets"
    );
}

#[test]
fn criterion_06_cci_analytic_cases() {
    let ns = [10u64, 20, 30, 40, 50];
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    let grid = |vals: &[f64]| -> Vec<(u64, f64)> {
        ns.iter().zip(vals.iter()).map(|(&n, &v)| (n, v)).collect()
    };
    let scratch = curve_from("scratch", &grid(&xs));

    let diagonal = cci(&scratch, &scratch).unwrap().cci;
    assert!(diagonal.abs() <= CCI_DIAGONAL_TOL);

    let halved: Vec<f64> = xs.iter().map(|x| x / 2.0).collect();
    let half = cci(&curve_from("m", &grid(&halved)), &scratch).unwrap().cci;
    assert!((half - 0.5).abs() <= CCI_ANALYTIC_TOL);

    let zero = cci(&curve_from("m", &grid(&[0.0; 5])), &scratch).unwrap().cci;
    assert!((zero - 1.0).abs() <= CCI_ANALYTIC_TOL);

    // quadratic curve y = x^2 over x in [0, 1]: analytic CCI is
    // (1/2 - 1/3) / (1/2) = 1/3
    let coarse_pts: Vec<(f64, f64)> = (0..1000)
        .map(|i| {
            let x = i as f64 / 999.0;
            (x, x * x)
        })
        .collect();
    let sample = |pts: &[(f64, f64)]| -> (CalibratedCurve, CalibratedCurve) {
        let s: Vec<(u64, f64)> = pts.iter().enumerate().map(|(i, p)| (i as u64 + 1, p.0)).collect();
        let f: Vec<(u64, f64)> = pts.iter().enumerate().map(|(i, p)| (i as u64 + 1, p.1)).collect();
        (curve_from("scratch", &s), curve_from("m", &f))
    };
    let (s_coarse, f_coarse) = sample(&coarse_pts);
    let coarse = cci(&f_coarse, &s_coarse).unwrap().cci;
    assert!((coarse - 1.0 / 3.0).abs() <= CCI_QUADRATURE_TOL);

    let refined = cci_quadrature_oracle(&f_coarse, &s_coarse, 100).unwrap();
    assert!((refined - coarse).abs() <= CCI_QUADRATURE_TOL);

    let fine_pts: Vec<(f64, f64)> = (0..100_000)
        .map(|i| {
            let x = i as f64 / 99_999.0;
            (x, x * x)
        })
        .collect();
    let (s_fine, f_fine) = sample(&fine_pts);
    let fine = cci(&f_fine, &s_fine).unwrap().cci;
    assert!((coarse - fine).abs() <= CCI_QUADRATURE_TOL);

    println!("criterion 06 PASS — CCI analytic cases (0, 0.5, 1, quadratic 1/3) within tolerance");
}

#[test]
fn criterion_07_power_law_calibration_identity() {
    let model = PowerLawModel::new(risk(0.9), risk(0.1), 100.0, 0.75, 0.0, 0).unwrap();
    let regimes = [10u64, 100, 1_000, 10_000, 100_000, 1_000_000];
    let curve = power_law_curve(&model, &regimes).unwrap();
    let b = baselines(0.9, 0.1);
    let calibrated = calibrate_curve(&curve, &b).unwrap();
    for (p, &n) in calibrated.points().iter().zip(regimes.iter()) {
        let expected = model.decay(n);
        let rel = (p.cr.value() - expected).abs() / expected.abs();
        assert!(rel <= POWER_LAW_REL_TOL, "n={n} rel={rel}");
    }
    println!(
        "criterion 07 PASS — noiseless power law calibrates to (1+n/n0)^-alpha within 1e-12 over n=10..1e6"
    );
}

#[test]
fn criterion_08_regime_validation() {
    let too_late = curve_from("scratch", &[(100, 0.6), (1000, 0.1)]);
    let report = validate_regimes(&too_late, DEFAULT_LOW_THRESHOLD, DEFAULT_HIGH_THRESHOLD);
    assert_eq!(report.warnings.len(), 1);
    assert!(report.warnings[0].contains("low-data regime"));

    let covering = curve_from("scratch", &[(10, 0.95), (100, 0.5), (100_000, 0.03)]);
    let report = validate_regimes(&covering, DEFAULT_LOW_THRESHOLD, DEFAULT_HIGH_THRESHOLD);
    assert!(report.warnings.is_empty());
    println!("criterion 08 PASS — coverage rule flags a 0.6 low end and passes a [0.95, 0.03] span");
}

#[test]
fn criterion_09_end_to_end_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_transfer-calib");
    let run = |args: &[&str]| {
        let output = Command::new(bin)
            .args(args)
            .env_remove("TRANSFER_CALIB_SEED")
            .output()
            .expect("binary runs");
        assert!(
            output.status.success(),
            "{:?}: {}",
            args,
            String::from_utf8_lossy(&output.stderr)
        );
    };
    let pipeline = |root: &Path| {
        let sim = root.join("sim");
        let cal = root.join("cal");
        let rep = root.join("rep");
        run(&[
            "simulate",
            "--noise",
            "0.02",
            "--seed",
            "123",
            "--seeds",
            "3",
            "--out",
            sim.to_str().unwrap(),
        ]);
        let log = sim.join("log.csv");
        let baselines = sim.join("baselines.csv");
        run(&[
            "calibrate",
            "--log",
            log.to_str().unwrap(),
            "--baselines",
            baselines.to_str().unwrap(),
            "--out",
            cal.to_str().unwrap(),
        ]);
        run(&[
            "report",
            "--log",
            log.to_str().unwrap(),
            "--baselines",
            baselines.to_str().unwrap(),
            "--out",
            rep.to_str().unwrap(),
        ]);
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    pipeline(&a);
    pipeline(&b);
    for file in [
        "sim/log.csv",
        "sim/baselines.csv",
        "cal/calibrated.csv",
        "rep/table.md",
        "rep/table.csv",
        "rep/cr_n_demo.svg",
        "rep/cr_scratch_demo.svg",
    ] {
        let left = std::fs::read(a.join(file)).unwrap();
        let right = std::fs::read(b.join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between runs");
    }
    let elapsed = start.elapsed().as_millis();
    assert!(elapsed < PIPELINE_BUDGET_MS, "took {elapsed} ms");
    println!(
        "criterion 09 PASS — simulate/calibrate/report byte-identical across runs ({elapsed} ms)"
    );
}

#[test]
fn criterion_10_format_round_trip() {
    let charset: Vec<char> = "abcXYZ019 _.,\"-".chars().collect();
    let opts = ParseOptions::default();
    for case in 0..100u64 {
        let count = 1 + (derive_seed(90, case) % 40) as usize;
        let mut by_key = BTreeMap::new();
        for i in 0..count {
            let s = case * 1000 + i as u64 * 7;
            let name = |stream: u64| -> String {
                let len = 1 + (derive_seed(91, s + stream) % 10) as usize;
                (0..len)
                    .map(|k| charset[(derive_seed(92, s + stream + k as u64) % charset.len() as u64) as usize])
                    .collect()
            };
            let rec = RiskRecord {
                method: name(0),
                task: name(100),
                n: 1 + derive_seed(93, s) % 1_000_000,
                seed: (derive_seed(94, s) % 2000) as i64 - 1000,
                risk: risk(uniform_in(95, s, -1e3, 1e3)),
            };
            by_key.insert((rec.method.clone(), rec.task.clone(), rec.n, rec.seed), rec);
        }
        let records: Vec<RiskRecord> = by_key.into_values().collect();
        let csv = serialize_log_csv(&records);
        assert_eq!(parse_log_csv(&csv, &opts).unwrap(), records, "CSV case {case}");
        let jsonl = serialize_log_jsonl(&records);
        assert_eq!(parse_log_jsonl(&jsonl, &opts).unwrap(), records, "JSONL case {case}");
    }
    println!("criterion 10 PASS — parse/serialize/parse identity on 100 random logs in both formats");
}
