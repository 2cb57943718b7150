//! Command-line pipelines for control-baseline calibrated evaluation.
//!
//! Subcommands cover the full workflow: `simulate` emits synthetic power-law
//! experiment logs, `blind-guess` computes the constant-prediction baseline
//! from label files, `calibrate` rescales measured risks against a baselines
//! file, `validate-regimes` checks data-regime coverage, `cci` summarizes
//! improvement over scratch, and `report` renders the two standard plots
//! plus tables.
//!
//! Exit codes: 0 success, 1 input/format errors, 2 semantic errors
//! (degenerate baselines, empty label sets, missing scratch curve). Every
//! error prints a single line `error[CODE]: detail` to stderr. Output files
//! are written atomically (write-temp-then-rename) and each run drops a
//! `run_manifest.json` recording inputs, flags, and the tool version.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use transfer_calib::baselines::{
    blind_guess, elementwise_blind_guess, empirical_risk, BaselinesError, Labels, LossKind,
    Prediction, Predictions,
};
use transfer_calib::curves::CalibratedCurve;
use transfer_calib::ingest::{
    aggregate, parse_baselines_csv, parse_log, serialize_baselines_csv, serialize_log_csv,
    validate_regimes, IngestError, ParseOptions, RiskRecord, DEFAULT_HIGH_THRESHOLD,
    DEFAULT_LOW_THRESHOLD, SCRATCH_METHOD,
};
use transfer_calib::labels::{parse_class_csv, write_tclb, TclbReader};
use transfer_calib::metrics::{calibrate_curve, cci, BaselineSet, Risk};
use transfer_calib::report::{
    format_fixed4, render_cr_n, render_cr_scratch, render_table, PlotSpec,
};
use transfer_calib::synth::{derive_seed, power_law_curve, PowerLawModel};

/// Environment variable that overrides the simulation seed.
const SEED_ENV: &str = "TRANSFER_CALIB_SEED";

#[derive(Parser)]
#[command(
    name = "transfer-calib",
    version,
    about = "Calibrated evaluation of transfer learning against control baselines"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Task loss: zero-one, l1, or l2.
    #[arg(long, global = true, default_value = "zero-one")]
    loss: String,

    /// Calibrated scratch risk required at the smallest regime.
    #[arg(long, global = true, default_value_t = DEFAULT_LOW_THRESHOLD, allow_negative_numbers = true)]
    low_threshold: f64,

    /// Calibrated scratch risk allowed at the largest regime.
    #[arg(long, global = true, default_value_t = DEFAULT_HIGH_THRESHOLD, allow_negative_numbers = true)]
    high_threshold: f64,

    /// Log-scale the n axis of plots (default).
    #[arg(long, global = true, overrides_with = "linear_x")]
    log_x: bool,

    /// Use a linear n axis instead of the default log scale.
    #[arg(long, global = true, overrides_with = "log_x")]
    linear_x: bool,

    /// Reject unknown fields in logs (default).
    #[arg(long, global = true, overrides_with = "lax")]
    strict: bool,

    /// Accept and ignore unknown fields in logs.
    #[arg(long, global = true, overrides_with = "strict")]
    lax: bool,
}

impl GlobalArgs {
    fn parse_options(&self) -> ParseOptions {
        ParseOptions {
            strict_fields: !self.lax,
        }
    }

    fn log_x(&self) -> bool {
        !self.linear_x
    }

    fn loss_kind(&self) -> Result<LossKind, CliError> {
        LossKind::parse(&self.loss).ok_or_else(|| {
            CliError::input(
                "E_LOSS",
                format!("unknown loss '{}': expected zero-one, l1, or l2", self.loss),
            )
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate an experiment log against a baselines file.
    Calibrate {
        /// Experiment log (CSV or JSON lines).
        #[arg(long)]
        log: PathBuf,
        /// Baselines CSV (task,blind_risk,max_risk).
        #[arg(long)]
        baselines: PathBuf,
    },
    /// Compute the blind-guess baseline from a label file.
    BlindGuess {
        /// Labels: class CSV (.csv) or dense binary (.tclb).
        #[arg(long)]
        labels: PathBuf,
        /// Evaluation labels for the reported risk; defaults to the input labels.
        #[arg(long)]
        eval: Option<PathBuf>,
        /// Memory budget in bytes for chunked dense statistics.
        #[arg(long, default_value_t = 256 * 1024 * 1024)]
        memory_budget: u64,
    },
    /// Render the two standard plots and summary tables.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        baselines: PathBuf,
        /// Plot width in pixels.
        #[arg(long, default_value_t = 800)]
        width: u32,
        /// Plot height in pixels.
        #[arg(long, default_value_t = 500)]
        height: u32,
        /// Rotates the deterministic color cycle.
        #[arg(long, default_value_t = 0)]
        style_seed: u64,
        /// Fail (exit 2) when a task has no scratch curve.
        #[arg(long)]
        require_scratch: bool,
    },
    /// Compute cumulative improvement over scratch per (task, method).
    Cci {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        baselines: PathBuf,
    },
    /// Check that measured regimes cover the blind-to-ceiling range.
    ValidateRegimes {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        baselines: PathBuf,
    },
    /// Emit a synthetic power-law experiment log plus matching baselines.
    Simulate {
        #[arg(long, default_value = "demo")]
        task: String,
        /// Name of the pre-trained method curve.
        #[arg(long, default_value = "pretrained")]
        method: String,
        /// Blind-guess risk level.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        blind: f64,
        /// Maximal-supervision risk level.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        max: f64,
        /// Half-saturation scale of the scratch curve.
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        n0: f64,
        /// Decay exponent.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
        /// Sample-efficiency factor of the pre-trained method.
        #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
        boost: f64,
        /// Gaussian noise scale in raw risk units.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        noise: f64,
        /// Seeds (repeats) per regime.
        #[arg(long, default_value_t = 3)]
        seeds: u32,
        /// Comma-separated strictly increasing regime sizes.
        #[arg(long, default_value = "10,32,100,316,1000,3162,10000,31623,100000")]
        regimes: String,
        /// Base RNG seed; TRANSFER_CALIB_SEED overrides it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad input or file format; exit 1.
    Input { code: &'static str, message: String },
    /// Semantically invalid request; exit 2.
    Semantic { code: &'static str, message: String },
}

impl CliError {
    fn input(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Input {
            code,
            message: message.into(),
        }
    }

    fn semantic(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Semantic {
            code,
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input { .. } => 1,
            CliError::Semantic { .. } => 2,
        }
    }

    fn report(&self) {
        let (code, message) = match self {
            CliError::Input { code, message } | CliError::Semantic { code, message } => {
                (code, message)
            }
        };
        eprintln!("error[{code}]: {}", message.replace('\n', " "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            err.report();
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Calibrate { log, baselines } => cmd_calibrate(&cli.global, log, baselines),
        Command::BlindGuess {
            labels,
            eval,
            memory_budget,
        } => cmd_blind_guess(&cli.global, labels, eval.as_deref(), *memory_budget),
        Command::Report {
            log,
            baselines,
            width,
            height,
            style_seed,
            require_scratch,
        } => cmd_report(
            &cli.global,
            log,
            baselines,
            *width,
            *height,
            *style_seed,
            *require_scratch,
        ),
        Command::Cci { log, baselines } => cmd_cci(&cli.global, log, baselines),
        Command::ValidateRegimes { log, baselines } => {
            cmd_validate_regimes(&cli.global, log, baselines)
        }
        Command::Simulate {
            task,
            method,
            blind,
            max,
            n0,
            alpha,
            boost,
            noise,
            seeds,
            regimes,
            seed,
        } => cmd_simulate(
            &cli.global,
            SimulateParams {
                task,
                method,
                blind: *blind,
                max: *max,
                n0: *n0,
                alpha: *alpha,
                boost: *boost,
                noise: *noise,
                seeds: *seeds,
                regimes,
                seed: *seed,
            },
        ),
    }
}

// ─── shared plumbing ─────────────────────────────────────────────────────────

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input("E_IO", format!("{}: {e}", path.display())))
}

fn classify_ingest(path: &Path, err: IngestError) -> CliError {
    let message = format!("{}: {err}", path.display());
    match err {
        IngestError::DegenerateBaselines { .. } => {
            CliError::semantic("E_DEGENERATE_BASELINES", message)
        }
        _ => CliError::input("E_PARSE", message),
    }
}

fn load_log(global: &GlobalArgs, path: &Path) -> Result<Vec<RiskRecord>, CliError> {
    let text = read_file(path)?;
    parse_log(&text, &global.parse_options()).map_err(|e| classify_ingest(path, e))
}

fn load_baselines(path: &Path) -> Result<Vec<BaselineSet>, CliError> {
    let text = read_file(path)?;
    parse_baselines_csv(&text).map_err(|e| classify_ingest(path, e))
}

/// Aggregates a log and calibrates every (method, task) curve against its
/// task's baselines.
fn load_calibrated(
    global: &GlobalArgs,
    log_path: &Path,
    baselines_path: &Path,
) -> Result<(Vec<CalibratedCurve>, Vec<BaselineSet>), CliError> {
    let records = load_log(global, log_path)?;
    let baselines = load_baselines(baselines_path)?;
    let by_task: BTreeMap<&str, &BaselineSet> =
        baselines.iter().map(|b| (b.task(), b)).collect();
    let mut curves = Vec::new();
    for curve in aggregate(&records) {
        let set = by_task.get(curve.task()).ok_or_else(|| {
            CliError::semantic(
                "E_MISSING_BASELINES",
                format!(
                    "task '{}' appears in {} but not in {}",
                    curve.task(),
                    log_path.display(),
                    baselines_path.display()
                ),
            )
        })?;
        let calibrated = calibrate_curve(&curve, set).map_err(|e| {
            CliError::semantic("E_CALIBRATION", format!("task '{}': {e}", curve.task()))
        })?;
        curves.push(calibrated);
    }
    Ok((curves, baselines))
}

fn ensure_out_dir(global: &GlobalArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&global.out)
        .map_err(|e| CliError::input("E_IO", format!("{}: {e}", global.out.display())))
}

/// Writes via a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let final_path = dir.join(name);
    let tmp_path = dir.join(format!(".{name}.tmp"));
    let io_err = |e: std::io::Error| CliError::input("E_IO", format!("{}: {e}", final_path.display()));
    let mut file = std::fs::File::create(&tmp_path).map_err(io_err)?;
    file.write_all(bytes).map_err(io_err)?;
    file.sync_all().map_err(io_err)?;
    drop(file);
    std::fs::rename(&tmp_path, &final_path).map_err(io_err)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    inputs: Vec<String>,
    flags: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn write_manifest(
    global: &GlobalArgs,
    subcommand: &'static str,
    inputs: &[&Path],
    flags: BTreeMap<String, String>,
    outputs: &[String],
) -> Result<(), CliError> {
    let manifest = Manifest {
        tool: "transfer-calib",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        flags,
        outputs: outputs.to_vec(),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_atomic(&global.out, "run_manifest.json", json.as_bytes())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

// ─── calibrate ───────────────────────────────────────────────────────────────

fn cmd_calibrate(global: &GlobalArgs, log: &Path, baselines: &Path) -> Result<(), CliError> {
    let (curves, _) = load_calibrated(global, log, baselines)?;
    ensure_out_dir(global)?;

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(["method", "task", "n", "cr", "stderr"])
        .expect("in-memory write cannot fail");
    for curve in &curves {
        for p in curve.points() {
            writer
                .write_record([
                    curve.method(),
                    curve.task(),
                    &p.n.to_string(),
                    &p.cr.value().to_string(),
                    &p.dispersion.unwrap_or(0.0).to_string(),
                ])
                .expect("in-memory write cannot fail");
        }
    }
    let bytes = writer.into_inner().expect("in-memory flush cannot fail");
    write_atomic(&global.out, "calibrated.csv", &bytes)?;

    let mut flags = BTreeMap::new();
    flags.insert("strict".into(), (!global.lax).to_string());
    write_manifest(
        global,
        "calibrate",
        &[log, baselines],
        flags,
        &["calibrated.csv".into()],
    )
}

// ─── blind-guess ─────────────────────────────────────────────────────────────

fn classify_baselines_err(err: BaselinesError) -> CliError {
    match err {
        BaselinesError::EmptyCollection => {
            CliError::semantic("E_EMPTY_LABELS", "label collection is empty")
        }
        BaselinesError::BudgetTooSmall { .. } => CliError::input("E_BUDGET", err.to_string()),
        other => CliError::input("E_FORMAT", other.to_string()),
    }
}

fn load_labels(path: &Path, loss: LossKind) -> Result<Labels, CliError> {
    let is_csv = path.extension().map(|e| e == "csv").unwrap_or(false);
    if is_csv {
        if loss != LossKind::ZeroOne {
            return Err(CliError::input(
                "E_LOSS",
                format!("class labels require the zero-one loss, got {loss}"),
            ));
        }
        let text = read_file(path)?;
        let classes = parse_class_csv(&text)
            .map_err(|e| CliError::input("E_FORMAT", format!("{}: {e}", path.display())))?;
        Ok(Labels::Classes(classes))
    } else {
        if loss == LossKind::ZeroOne {
            return Err(CliError::input(
                "E_LOSS",
                "dense labels require the l1 or l2 loss".to_string(),
            ));
        }
        let mut reader = TclbReader::open(path)
            .map_err(|e| CliError::input("E_FORMAT", format!("{}: {e}", path.display())))?;
        let dense = reader
            .read_all()
            .map_err(|e| CliError::input("E_FORMAT", format!("{}: {e}", path.display())))?;
        Ok(Labels::Dense(dense))
    }
}

fn cmd_blind_guess(
    global: &GlobalArgs,
    labels_path: &Path,
    eval_path: Option<&Path>,
    memory_budget: u64,
) -> Result<(), CliError> {
    let loss = global.loss_kind()?;
    ensure_out_dir(global)?;
    let is_csv = labels_path.extension().map(|e| e == "csv").unwrap_or(false);

    let (guess, prediction_file) = if is_csv {
        let labels = load_labels(labels_path, loss)?;
        let guess = blind_guess(&labels, loss).map_err(classify_baselines_err)?;
        (guess, "blind_prediction.txt".to_string())
    } else {
        if loss == LossKind::ZeroOne {
            return Err(CliError::input(
                "E_LOSS",
                "dense labels require the l1 or l2 loss".to_string(),
            ));
        }
        let mut reader = TclbReader::open(labels_path)
            .map_err(|e| CliError::input("E_FORMAT", format!("{}: {e}", labels_path.display())))?;
        let dtype = reader.dtype();
        let guess = elementwise_blind_guess(&mut reader, loss, memory_budget)
            .map_err(classify_baselines_err)?;
        if let Prediction::Dense { dims, values } = &guess.prediction {
            let name = "blind_prediction.tclb";
            let tmp = global.out.join(format!(".{name}.tmp"));
            write_tclb(&tmp, dims, dtype, values, 1)
                .map_err(|e| CliError::input("E_IO", e.to_string()))?;
            std::fs::rename(&tmp, global.out.join(name))
                .map_err(|e| CliError::input("E_IO", e.to_string()))?;
        }
        (guess, "blind_prediction.tclb".to_string())
    };

    if let Prediction::Class(class) = &guess.prediction {
        write_atomic(
            &global.out,
            "blind_prediction.txt",
            format!("{class}\n").as_bytes(),
        )?;
    }

    let eval_labels = match eval_path {
        Some(p) => load_labels(p, loss)?,
        None => load_labels(labels_path, loss)?,
    };
    let risk = empirical_risk(Predictions::Constant(&guess.prediction), &eval_labels, loss)
        .map_err(classify_baselines_err)?;
    write_atomic(
        &global.out,
        "blind_risk.txt",
        format!("{}\n", risk.value()).as_bytes(),
    )?;

    println!(
        "blind guess written to {}; empirical {} risk {}",
        global.out.join(&prediction_file).display(),
        loss,
        risk.value()
    );

    let mut flags = BTreeMap::new();
    flags.insert("loss".into(), loss.to_string());
    flags.insert("memory_budget".into(), memory_budget.to_string());
    let mut inputs: Vec<&Path> = vec![labels_path];
    if let Some(p) = eval_path {
        inputs.push(p);
    }
    write_manifest(
        global,
        "blind-guess",
        &inputs,
        flags,
        &[prediction_file, "blind_risk.txt".into()],
    )
}

// ─── report ──────────────────────────────────────────────────────────────────

fn cmd_report(
    global: &GlobalArgs,
    log: &Path,
    baselines_path: &Path,
    width: u32,
    height: u32,
    style_seed: u64,
    require_scratch: bool,
) -> Result<(), CliError> {
    let (curves, baselines) = load_calibrated(global, log, baselines_path)?;
    ensure_out_dir(global)?;

    let mut by_task: BTreeMap<String, Vec<CalibratedCurve>> = BTreeMap::new();
    for curve in curves.iter().cloned() {
        by_task.entry(curve.task().to_string()).or_default().push(curve);
    }

    let mut outputs = Vec::new();
    let mut ccis: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (task, task_curves) in &by_task {
        let safe = sanitize(task);

        let mut spec = PlotSpec::cr_vs_n(
            task_curves.clone(),
            format!("{task}: calibrated risk vs transfer set size"),
        );
        spec.width = width;
        spec.height = height;
        spec.style_seed = style_seed;
        spec.log_x = global.log_x();
        let svg = render_cr_n(&spec)
            .map_err(|e| CliError::semantic("E_PLOT", format!("task '{task}': {e}")))?;
        let name = format!("cr_n_{safe}.svg");
        write_atomic(&global.out, &name, svg.as_bytes())?;
        outputs.push(name);

        let scratch = task_curves.iter().find(|c| c.method() == SCRATCH_METHOD);
        match scratch {
            Some(scratch) => {
                for curve in task_curves {
                    if let Ok(result) = cci(curve, scratch) {
                        ccis.insert((task.clone(), curve.method().to_string()), result.cci);
                    }
                }
                let report =
                    validate_regimes(scratch, global.low_threshold, global.high_threshold);
                for warning in &report.warnings {
                    eprintln!("warning[W_REGIME]: task '{task}': {warning}");
                }
                let mut spec = PlotSpec::cr_vs_scratch(
                    task_curves.clone(),
                    format!("{task}: calibrated risk vs scratch"),
                );
                spec.width = width;
                spec.height = height;
                spec.style_seed = style_seed;
                let svg = render_cr_scratch(&spec)
                    .map_err(|e| CliError::semantic("E_PLOT", format!("task '{task}': {e}")))?;
                let name = format!("cr_scratch_{safe}.svg");
                write_atomic(&global.out, &name, svg.as_bytes())?;
                outputs.push(name);
            }
            None if require_scratch => {
                return Err(CliError::semantic(
                    "E_MISSING_SCRATCH",
                    format!("task '{task}' has no '{SCRATCH_METHOD}' curve"),
                ));
            }
            None => {
                eprintln!(
                    "warning[W_MISSING_SCRATCH]: task '{task}' has no '{SCRATCH_METHOD}' curve; skipping the scratch plot"
                );
            }
        }
    }

    let table = render_table(&curves, &baselines, &ccis);
    write_atomic(&global.out, "table.md", table.markdown.as_bytes())?;
    write_atomic(&global.out, "table.csv", table.csv.as_bytes())?;
    outputs.push("table.md".into());
    outputs.push("table.csv".into());

    let mut flags = BTreeMap::new();
    flags.insert("width".into(), width.to_string());
    flags.insert("height".into(), height.to_string());
    flags.insert("style_seed".into(), style_seed.to_string());
    flags.insert("log_x".into(), global.log_x().to_string());
    flags.insert("low_threshold".into(), global.low_threshold.to_string());
    flags.insert("high_threshold".into(), global.high_threshold.to_string());
    flags.insert("require_scratch".into(), require_scratch.to_string());
    write_manifest(global, "report", &[log, baselines_path], flags, &outputs)
}

// ─── cci ─────────────────────────────────────────────────────────────────────

fn cmd_cci(global: &GlobalArgs, log: &Path, baselines_path: &Path) -> Result<(), CliError> {
    let (curves, _) = load_calibrated(global, log, baselines_path)?;
    let mut by_task: BTreeMap<&str, Vec<&CalibratedCurve>> = BTreeMap::new();
    for curve in &curves {
        by_task.entry(curve.task()).or_default().push(curve);
    }

    let mut rows = Vec::new();
    let mut saw_scratch = false;
    for (task, task_curves) in &by_task {
        let Some(scratch) = task_curves.iter().find(|c| c.method() == SCRATCH_METHOD) else {
            eprintln!("warning[W_MISSING_SCRATCH]: task '{task}' has no '{SCRATCH_METHOD}' curve");
            continue;
        };
        saw_scratch = true;
        for curve in task_curves {
            if curve.method() == SCRATCH_METHOD {
                continue;
            }
            match cci(curve, scratch) {
                Ok(result) => rows.push((
                    task.to_string(),
                    curve.method().to_string(),
                    result,
                )),
                Err(e) => eprintln!(
                    "warning[W_CCI]: task '{task}', method '{}': {e}",
                    curve.method()
                ),
            }
        }
    }
    if !saw_scratch {
        return Err(CliError::semantic(
            "E_MISSING_SCRATCH",
            format!("no task has a '{SCRATCH_METHOD}' curve; CCI is undefined"),
        ));
    }

    ensure_out_dir(global)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(["task", "method", "cci", "x_min", "x_max", "segments"])
        .expect("in-memory write cannot fail");
    for (task, method, result) in &rows {
        writer
            .write_record([
                task.as_str(),
                method.as_str(),
                &result.cci.to_string(),
                &result.x_range.0.to_string(),
                &result.x_range.1.to_string(),
                &result.segment_count.to_string(),
            ])
            .expect("in-memory write cannot fail");
        println!("task={task} method={method} cci={}", format_fixed4(result.cci));
    }
    let bytes = writer.into_inner().expect("in-memory flush cannot fail");
    write_atomic(&global.out, "cci.csv", &bytes)?;
    write_manifest(
        global,
        "cci",
        &[log, baselines_path],
        BTreeMap::new(),
        &["cci.csv".into()],
    )
}

// ─── validate-regimes ────────────────────────────────────────────────────────

fn cmd_validate_regimes(
    global: &GlobalArgs,
    log: &Path,
    baselines_path: &Path,
) -> Result<(), CliError> {
    let (curves, _) = load_calibrated(global, log, baselines_path)?;
    let mut by_task: BTreeMap<&str, Vec<&CalibratedCurve>> = BTreeMap::new();
    for curve in &curves {
        by_task.entry(curve.task()).or_default().push(curve);
    }
    for (task, task_curves) in &by_task {
        let Some(scratch) = task_curves.iter().find(|c| c.method() == SCRATCH_METHOD) else {
            eprintln!("warning[W_MISSING_SCRATCH]: task '{task}' has no '{SCRATCH_METHOD}' curve");
            continue;
        };
        let report = validate_regimes(scratch, global.low_threshold, global.high_threshold);
        println!(
            "task={task} low_end_cr={} high_end_cr={} status={}",
            format_fixed4(report.low_end_cr.value()),
            format_fixed4(report.high_end_cr.value()),
            if report.warnings.is_empty() { "ok" } else { "warn" }
        );
        for warning in &report.warnings {
            eprintln!("warning[W_REGIME]: task '{task}': {warning}");
        }
    }
    ensure_out_dir(global)?;
    let mut flags = BTreeMap::new();
    flags.insert("low_threshold".into(), global.low_threshold.to_string());
    flags.insert("high_threshold".into(), global.high_threshold.to_string());
    write_manifest(global, "validate-regimes", &[log, baselines_path], flags, &[])
}

// ─── simulate ────────────────────────────────────────────────────────────────

struct SimulateParams<'a> {
    task: &'a str,
    method: &'a str,
    blind: f64,
    max: f64,
    n0: f64,
    alpha: f64,
    boost: f64,
    noise: f64,
    seeds: u32,
    regimes: &'a str,
    seed: u64,
}

fn cmd_simulate(global: &GlobalArgs, params: SimulateParams<'_>) -> Result<(), CliError> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(value) => value.trim().parse::<u64>().map_err(|e| {
            CliError::input("E_SEED", format!("{SEED_ENV}='{value}' is not a valid seed: {e}"))
        })?,
        Err(_) => params.seed,
    };
    if params.method == SCRATCH_METHOD {
        return Err(CliError::input(
            "E_INVALID_MODEL",
            format!("method name '{SCRATCH_METHOD}' is reserved for the scratch control"),
        ));
    }
    if params.seeds == 0 {
        return Err(CliError::input("E_INVALID_MODEL", "seeds must be at least 1"));
    }
    let regimes: Vec<u64> = params
        .regimes
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::input("E_REGIMES", format!("bad regime list: {e}")))?;

    let blind = Risk::new(params.blind)
        .map_err(|e| CliError::input("E_INVALID_MODEL", e.to_string()))?;
    let max = Risk::new(params.max)
        .map_err(|e| CliError::input("E_INVALID_MODEL", e.to_string()))?;
    let scratch_model = PowerLawModel::new(blind, max, params.n0, params.alpha, params.noise, 0)
        .map_err(|e| CliError::input("E_INVALID_MODEL", e.to_string()))?;
    let method_model = scratch_model
        .with_sample_boost(params.boost)
        .map_err(|e| CliError::input("E_INVALID_MODEL", e.to_string()))?;

    let mut records = Vec::new();
    for (stream, (name, model)) in [
        (SCRATCH_METHOD, &scratch_model),
        (params.method, &method_model),
    ]
    .iter()
    .enumerate()
    {
        for k in 0..params.seeds {
            let stream_id = (stream as u64) << 32 | u64::from(k);
            let seeded = model.with_seed(derive_seed(seed, stream_id));
            let curve = power_law_curve(&seeded, &regimes)
                .map_err(|e| CliError::input("E_REGIMES", e.to_string()))?;
            for p in curve.points() {
                records.push(RiskRecord {
                    method: name.to_string(),
                    task: params.task.to_string(),
                    n: p.n,
                    seed: i64::from(k),
                    risk: p.risk,
                });
            }
        }
    }

    ensure_out_dir(global)?;
    write_atomic(&global.out, "log.csv", serialize_log_csv(&records).as_bytes())?;
    let baseline_set = BaselineSet::new(params.task, blind, max)
        .expect("model validation guarantees blind > max");
    write_atomic(
        &global.out,
        "baselines.csv",
        serialize_baselines_csv(std::slice::from_ref(&baseline_set)).as_bytes(),
    )?;

    let mut flags = BTreeMap::new();
    flags.insert("task".into(), params.task.to_string());
    flags.insert("method".into(), params.method.to_string());
    flags.insert("blind".into(), params.blind.to_string());
    flags.insert("max".into(), params.max.to_string());
    flags.insert("n0".into(), params.n0.to_string());
    flags.insert("alpha".into(), params.alpha.to_string());
    flags.insert("boost".into(), params.boost.to_string());
    flags.insert("noise".into(), params.noise.to_string());
    flags.insert("seeds".into(), params.seeds.to_string());
    flags.insert("regimes".into(), params.regimes.to_string());
    flags.insert("seed".into(), seed.to_string());
    write_manifest(
        global,
        "simulate",
        &[],
        flags,
        &["log.csv".into(), "baselines.csv".into()],
    )
}
