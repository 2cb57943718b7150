//! End-to-end tests of the command-line surface: exit codes, produced
//! files, and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use transfer_calib::baselines::{blind_guess, DenseLabels, Labels, LossKind, Prediction};
use transfer_calib::labels::{write_tclb, LabelDtype, TclbReader};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_transfer-calib"));
    cmd.env_remove("TRANSFER_CALIB_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

const TOY_LOG: &str = "method,task,n,seed,risk\n\
scratch,demo,10,0,0.75\n\
scratch,demo,10,1,1.0\n\
scratch,demo,100,0,0.5\n\
scratch,demo,1000,0,0.15\n\
encoder_a,demo,10,0,0.6\n\
encoder_a,demo,100,0,0.3\n\
encoder_a,demo,1000,0,0.1\n";

const TOY_BASELINES: &str = "task,blind_risk,max_risk\ndemo,1.0,0.0\n";

fn toy_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let log = dir.join("log.csv");
    let baselines = dir.join("baselines.csv");
    write(&log, TOY_LOG);
    write(&baselines, TOY_BASELINES);
    (log, baselines)
}

#[test]
fn calibrate_writes_one_row_per_group() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "calibrate",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let calibrated = std::fs::read_to_string(out.join("calibrated.csv")).unwrap();
    // 6 distinct (method, task, n) groups plus the header
    assert_eq!(calibrated.lines().count(), 7);
    assert!(calibrated.starts_with("method,task,n,cr,stderr\n"));
    // scratch@10: mean risk over seeds {0.75, 1.0} calibrates to 0.875
    assert!(calibrated.contains("scratch,demo,10,0.875,"));
    assert!(out.join("run_manifest.json").exists());
}

#[test]
fn calibrate_missing_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "calibrate",
        "--log",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--baselines",
        dir.path().join("absent2.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("error[E_IO]"));
}

#[test]
fn calibrate_degenerate_baselines_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    write(&baselines, "task,blind_risk,max_risk\ndemo,0.5,0.5\n");
    let output = run(&[
        "calibrate",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("error[E_DEGENERATE_BASELINES]"));
}

#[test]
fn calibrate_parse_error_names_file_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    write(&log, "method,task,n,seed,risk\nm,demo,0,0,0.5\n");
    let output = run(&[
        "calibrate",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("error[E_PARSE]"));
    assert!(stderr.contains("log.csv"));
    assert!(stderr.contains("row 1"));
}

#[test]
fn report_writes_plots_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    let out = dir.path().join("rep");
    let output = run(&[
        "report",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    for name in ["cr_n_demo.svg", "cr_scratch_demo.svg", "table.md", "table.csv"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("task,method,"));
    assert!(lines.next().unwrap().starts_with("demo,scratch,"));
    assert!(lines.next().unwrap().starts_with("demo,encoder_a,"));
}

#[test]
fn report_without_scratch_warns_or_fails() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let baselines = dir.path().join("baselines.csv");
    write(
        &log,
        "method,task,n,seed,risk\nencoder_a,demo,10,0,0.6\nencoder_a,demo,100,0,0.3\n",
    );
    write(&baselines, TOY_BASELINES);
    let out = dir.path().join("rep");
    let output = run(&[
        "report",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert!(stderr_of(&output).contains("warning[W_MISSING_SCRATCH]"));
    assert!(out.join("cr_n_demo.svg").exists());
    assert!(!out.join("cr_scratch_demo.svg").exists());
    assert!(out.join("table.csv").exists());

    let output = run(&[
        "report",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("rep2").to_str().unwrap(),
        "--require-scratch",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("error[E_MISSING_SCRATCH]"));
}

#[test]
fn report_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let output = run(&[
            "report",
            "--log",
            log.to_str().unwrap(),
            "--baselines",
            baselines.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        let mut bytes = Vec::new();
        for file in ["cr_n_demo.svg", "cr_scratch_demo.svg", "table.md", "table.csv"] {
            bytes.push(std::fs::read(out.join(file)).unwrap());
        }
        outputs.push(bytes);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn blind_guess_class_labels() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("train.csv");
    write(&labels, "sample_id,class\na,0\nb,0\nc,1\nd,2\n");
    let eval = dir.path().join("test.csv");
    write(&eval, "sample_id,class\nx,0\ny,1\n");
    let out = dir.path().join("out");
    let output = run(&[
        "blind-guess",
        "--labels",
        labels.to_str().unwrap(),
        "--eval",
        eval.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    assert_eq!(
        std::fs::read_to_string(out.join("blind_prediction.txt")).unwrap(),
        "0\n"
    );
    assert_eq!(
        std::fs::read_to_string(out.join("blind_risk.txt")).unwrap(),
        "0.5\n"
    );
}

#[test]
fn blind_guess_empty_labels_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("empty.csv");
    write(&labels, "sample_id,class\n");
    let output = run(&[
        "blind-guess",
        "--labels",
        labels.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("error[E_EMPTY_LABELS]"));
}

#[test]
fn blind_guess_dense_median_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let labels_path = dir.path().join("train.tclb");
    let values: Vec<f64> = (0..3 * 4).map(|i| ((i * 31) % 7) as f64).collect();
    write_tclb(&labels_path, &[2, 2], LabelDtype::F64, &values, 3).unwrap();

    let out = dir.path().join("out");
    let output = run(&[
        "blind-guess",
        "--labels",
        labels_path.to_str().unwrap(),
        "--loss",
        "l1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));

    let mut reader = TclbReader::open(&out.join("blind_prediction.tclb")).unwrap();
    let written = reader.read_all().unwrap();
    let dense = DenseLabels::new(vec![2, 2], values).unwrap();
    let expected = blind_guess(&Labels::Dense(dense), LossKind::L1).unwrap();
    match expected.prediction {
        Prediction::Dense { values, .. } => assert_eq!(written.sample(0), values.as_slice()),
        _ => panic!("expected dense prediction"),
    }
    assert!(out.join("blind_risk.txt").exists());
}

#[test]
fn blind_guess_rejects_mismatched_loss() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("train.csv");
    write(&labels, "sample_id,class\na,0\n");
    let output = run(&[
        "blind-guess",
        "--labels",
        labels.to_str().unwrap(),
        "--loss",
        "l2",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("error[E_LOSS]"));
}

#[test]
fn simulate_is_seeded_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for name in ["s1", "s2"] {
        let out = dir.path().join(name);
        let output = run(&[
            "simulate",
            "--noise",
            "0.05",
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        logs.push(std::fs::read(out.join("log.csv")).unwrap());
    }
    assert_eq!(logs[0], logs[1]);

    let out = dir.path().join("s3");
    let output = bin()
        .args([
            "simulate",
            "--noise",
            "0.05",
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
        ])
        .env("TRANSFER_CALIB_SEED", "100")
        .output()
        .unwrap();
    assert!(output.status.success());
    let overridden = std::fs::read(out.join("log.csv")).unwrap();
    assert_ne!(overridden, logs[0]);

    let output = run(&[
        "simulate",
        "--alpha",
        "-1",
        "--out",
        dir.path().join("s4").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("error[E_INVALID_MODEL]"));
}

#[test]
fn simulated_log_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let output = run(&["simulate", "--seeds", "2", "--out", out.to_str().unwrap()]);
    assert!(output.status.success());
    let log = std::fs::read_to_string(out.join("log.csv")).unwrap();
    let records =
        transfer_calib::ingest::parse_log(&log, &transfer_calib::ingest::ParseOptions::default())
            .unwrap();
    // 2 methods x 2 seeds x 9 regimes
    assert_eq!(records.len(), 36);
}

#[test]
fn cci_requires_scratch() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let baselines = dir.path().join("baselines.csv");
    write(&log, "method,task,n,seed,risk\nencoder_a,demo,10,0,0.6\n");
    write(&baselines, TOY_BASELINES);
    let output = run(&[
        "cci",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_of(&output).contains("error[E_MISSING_SCRATCH]"));
}

#[test]
fn cci_reports_positive_improvement() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    let out = dir.path().join("out");
    let output = run(&[
        "cci",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", stderr_of(&output));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("task=demo method=encoder_a cci=0."), "{stdout}");
    let csv = std::fs::read_to_string(out.join("cci.csv")).unwrap();
    assert!(csv.starts_with("task,method,cci,x_min,x_max,segments\n"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn validate_regimes_prints_status() {
    let dir = tempfile::tempdir().unwrap();
    let (log, baselines) = toy_inputs(dir.path());
    let output = run(&[
        "validate-regimes",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("task=demo"));
    assert!(stdout.contains("low_end_cr=0.8750"));
    assert!(stdout.contains("status=ok"));
}

#[test]
fn lax_flag_accepts_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let baselines = dir.path().join("baselines.csv");
    write(
        &log,
        "method,task,n,seed,risk,gpu\nscratch,demo,10,0,0.9,a100\n",
    );
    write(&baselines, TOY_BASELINES);
    let strict = run(&[
        "calibrate",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr_of(&strict).contains("unknown field"));

    let lax = run(&[
        "calibrate",
        "--lax",
        "--log",
        log.to_str().unwrap(),
        "--baselines",
        baselines.to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert!(lax.status.success(), "{}", stderr_of(&lax));
}
