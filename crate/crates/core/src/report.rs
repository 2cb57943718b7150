//! Deterministic rendering of calibrated learning curves.
//!
//! Two standard plots are produced as standalone SVG documents:
//!
//! * calibrated risk against transfer-set size, with horizontal reference
//!   lines at 0 (maximal supervision) and 1 (blind guess),
//! * calibrated risk against the scratch calibrated risk, which maps the
//!   scratch curve onto the main diagonal; curves below the diagonal beat
//!   training from scratch, and each legend entry carries the method's
//!   cumulative improvement (CCI).
//!
//! Rendering is pure string building with fixed-precision coordinates, so
//! identical inputs give byte-identical documents. Colors are assigned from
//! the lexicographic order of method names, not insertion order, so re-runs
//! over reordered logs render identically.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::curves::CalibratedCurve;
use crate::ingest::SCRATCH_METHOD;
use crate::metrics::{self, BaselineSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("no curves to plot")]
    EmptyCurveSet,
    #[error("no '{SCRATCH_METHOD}' curve present")]
    MissingScratch,
    #[error("curve '{0}' is not measured on the scratch n grid")]
    GridMismatch(String),
}

/// Which of the two standard plots to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Calibrated risk vs transfer-set size.
    CrVsN,
    /// Calibrated risk vs scratch calibrated risk.
    CrVsScratch,
}

/// Everything needed to render one plot deterministically.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub curves: Vec<CalibratedCurve>,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
    /// Rotates the deterministic color cycle.
    pub style_seed: u64,
    /// Log-scale the n axis (ignored for [`PlotKind::CrVsScratch`]).
    pub log_x: bool,
}

impl PlotSpec {
    pub fn cr_vs_n(curves: Vec<CalibratedCurve>, title: impl Into<String>) -> Self {
        Self {
            kind: PlotKind::CrVsN,
            curves,
            title: title.into(),
            x_label: "transfer dataset size n".into(),
            y_label: "calibrated risk".into(),
            width: 800,
            height: 500,
            style_seed: 0,
            log_x: true,
        }
    }

    pub fn cr_vs_scratch(curves: Vec<CalibratedCurve>, title: impl Into<String>) -> Self {
        Self {
            kind: PlotKind::CrVsScratch,
            curves,
            title: title.into(),
            x_label: "scratch calibrated risk".into(),
            y_label: "calibrated risk".into(),
            width: 800,
            height: 500,
            style_seed: 0,
            log_x: false,
        }
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 176.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Fraction of the data span added as padding on each side of an axis.
pub const AXIS_PADDING_FRACTION: f64 = 0.05;

/// Pads a data range by [`AXIS_PADDING_FRACTION`] of its span on each side.
/// A degenerate range is treated as having unit span.
pub fn padded_range(min: f64, max: f64) -> (f64, f64) {
    let span = if max > min { max - min } else { 1.0 };
    let pad = AXIS_PADDING_FRACTION * span;
    (min - pad, max + pad)
}

struct AxisMap {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl AxisMap {
    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn sorted_methods(curves: &[CalibratedCurve]) -> Vec<String> {
    let mut methods: Vec<String> = curves.iter().map(|c| c.method().to_string()).collect();
    methods.sort();
    methods
}

fn color_for(methods: &[String], method: &str, style_seed: u64) -> &'static str {
    let rank = methods.iter().position(|m| m == method).unwrap_or(0);
    PALETTE[(rank + style_seed as usize) % PALETTE.len()]
}

/// Renders the calibrated-risk vs transfer-set-size plot.
///
/// The y range always covers the two reference lines, so both anchors stay
/// visible regardless of the data.
pub fn render_cr_n(spec: &PlotSpec) -> Result<String, ReportError> {
    if spec.curves.is_empty() {
        return Err(ReportError::EmptyCurveSet);
    }
    let methods = sorted_methods(&spec.curves);
    let mut curves: Vec<&CalibratedCurve> = spec.curves.iter().collect();
    curves.sort_by(|a, b| a.method().cmp(b.method()));

    let xt = |n: u64| -> f64 {
        if spec.log_x {
            (n as f64).log10()
        } else {
            n as f64
        }
    };
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min: f64 = 0.0; // reference lines are always in view
    let mut y_max: f64 = 1.0;
    for curve in &curves {
        for p in curve.points() {
            let x = xt(p.n);
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            let d = p.dispersion.unwrap_or(0.0);
            y_min = y_min.min(p.cr.value() - d);
            y_max = y_max.max(p.cr.value() + d);
        }
    }
    let (x_lo, x_hi) = padded_range(x_min, x_max);
    let (y_lo, y_hi) = padded_range(y_min, y_max);

    let mut svg = SvgCanvas::new(spec);
    let (xm, ym) = svg.frame(x_lo, x_hi, y_lo, y_hi);

    if spec.log_x {
        svg.log_x_ticks(&xm, x_min, x_max);
    } else {
        svg.linear_x_ticks(&xm);
    }
    svg.y_ticks(&ym);

    svg.ref_line(&xm, &ym, 1.0, "blind guess");
    svg.ref_line(&xm, &ym, 0.0, "maximal supervision");

    for curve in &curves {
        let color = color_for(&methods, curve.method(), spec.style_seed);
        if curve.points().iter().any(|p| p.dispersion.unwrap_or(0.0) > 0.0) {
            let mut pts = Vec::new();
            for p in curve.points() {
                let d = p.dispersion.unwrap_or(0.0);
                pts.push((xm.map(xt(p.n)), ym.map(p.cr.value() + d)));
            }
            for p in curve.points().iter().rev() {
                let d = p.dispersion.unwrap_or(0.0);
                pts.push((xm.map(xt(p.n)), ym.map(p.cr.value() - d)));
            }
            svg.band(&pts, color);
        }
        let pts: Vec<(f64, f64)> = curve
            .points()
            .iter()
            .map(|p| (xm.map(xt(p.n)), ym.map(p.cr.value())))
            .collect();
        svg.curve(&pts, color);
    }

    svg.legend(&curves, &methods, spec.style_seed, &BTreeMap::new());
    Ok(svg.finish())
}

/// Renders the calibrated-risk vs scratch-calibrated-risk plot.
///
/// Requires a curve for the reserved method name `scratch`, measured on the
/// same n grid as every other curve. The main diagonal is drawn between the
/// extremes of the observed scratch range, and each legend entry reports the
/// method's CCI against scratch.
pub fn render_cr_scratch(spec: &PlotSpec) -> Result<String, ReportError> {
    if spec.curves.is_empty() {
        return Err(ReportError::EmptyCurveSet);
    }
    let scratch = spec
        .curves
        .iter()
        .find(|c| c.method() == SCRATCH_METHOD)
        .ok_or(ReportError::MissingScratch)?;
    for curve in &spec.curves {
        if !curve.same_grid(scratch) {
            return Err(ReportError::GridMismatch(curve.method().to_string()));
        }
    }
    let methods = sorted_methods(&spec.curves);
    let mut curves: Vec<&CalibratedCurve> = spec.curves.iter().collect();
    curves.sort_by(|a, b| a.method().cmp(b.method()));

    let xs: Vec<f64> = scratch.points().iter().map(|p| p.cr.value()).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut y_min = x_min; // the diagonal is always in view
    let mut y_max = x_max;
    for curve in &curves {
        for p in curve.points() {
            y_min = y_min.min(p.cr.value());
            y_max = y_max.max(p.cr.value());
        }
    }
    let (x_lo, x_hi) = padded_range(x_min, x_max);
    let (y_lo, y_hi) = padded_range(y_min, y_max);

    let mut svg = SvgCanvas::new(spec);
    let (xm, ym) = svg.frame(x_lo, x_hi, y_lo, y_hi);
    svg.linear_x_ticks(&xm);
    svg.y_ticks(&ym);
    svg.diagonal(&xm, &ym, x_min, x_max);

    let mut ccis: BTreeMap<String, Option<f64>> = BTreeMap::new();
    for curve in &curves {
        let color = color_for(&methods, curve.method(), spec.style_seed);
        let pts: Vec<(f64, f64)> = curve
            .points()
            .iter()
            .zip(xs.iter())
            .map(|(p, &x)| (xm.map(x), ym.map(p.cr.value())))
            .collect();
        svg.curve(&pts, color);
        let cci = metrics::cci(curve, scratch).ok().map(|r| r.cci);
        ccis.insert(curve.method().to_string(), cci);
    }

    svg.legend(&curves, &methods, spec.style_seed, &ccis);
    Ok(svg.finish())
}

struct SvgCanvas {
    out: String,
    width: f64,
    height: f64,
    title: String,
    x_label: String,
    y_label: String,
}

impl SvgCanvas {
    fn new(spec: &PlotSpec) -> Self {
        let width = spec.width as f64;
        let height = spec.height as f64;
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"Helvetica,Arial,sans-serif\">\n",
            w = spec.width,
            h = spec.height
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
            w = spec.width,
            h = spec.height
        ));
        Self {
            out,
            width,
            height,
            title: spec.title.clone(),
            x_label: spec.x_label.clone(),
            y_label: spec.y_label.clone(),
        }
    }

    fn plot_right(&self) -> f64 {
        (self.width - MARGIN_RIGHT).max(MARGIN_LEFT + 10.0)
    }

    fn plot_bottom(&self) -> f64 {
        (self.height - MARGIN_BOTTOM).max(MARGIN_TOP + 10.0)
    }

    /// Draws the frame, title, and axis labels; returns the data-to-pixel
    /// maps for the padded ranges.
    fn frame(&mut self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> (AxisMap, AxisMap) {
        let xm = AxisMap {
            d0: x_lo,
            d1: x_hi,
            p0: MARGIN_LEFT,
            p1: self.plot_right(),
        };
        let ym = AxisMap {
            d0: y_lo,
            d1: y_hi,
            p0: self.plot_bottom(),
            p1: MARGIN_TOP,
        };
        self.out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            px(MARGIN_LEFT),
            px(MARGIN_TOP),
            px(self.plot_right() - MARGIN_LEFT),
            px(self.plot_bottom() - MARGIN_TOP)
        ));
        let cx = (MARGIN_LEFT + self.plot_right()) / 2.0;
        self.out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" fill=\"#111111\">{}</text>\n",
            px(cx),
            escape_xml(&self.title)
        ));
        self.out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#111111\">{}</text>\n",
            px(cx),
            px(self.height - 14.0),
            escape_xml(&self.x_label)
        ));
        let cy = (MARGIN_TOP + self.plot_bottom()) / 2.0;
        self.out.push_str(&format!(
            "<text x=\"18\" y=\"{cy}\" text-anchor=\"middle\" font-size=\"12\" fill=\"#111111\" transform=\"rotate(-90 18 {cy})\">{label}</text>\n",
            cy = px(cy),
            label = escape_xml(&self.y_label)
        ));
        (xm, ym)
    }

    fn x_tick(&mut self, xm: &AxisMap, value: f64, label: &str) {
        let x = xm.map(value);
        if x < MARGIN_LEFT - 0.01 || x > self.plot_right() + 0.01 {
            return;
        }
        let bottom = self.plot_bottom();
        self.out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y1}\" x2=\"{x}\" y2=\"{y2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            x = px(x),
            y1 = px(bottom),
            y2 = px(bottom + 5.0)
        ));
        self.out.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-size=\"11\" fill=\"#333333\">{label}</text>\n",
            x = px(x),
            y = px(bottom + 18.0),
            label = escape_xml(label)
        ));
    }

    fn log_x_ticks(&mut self, xm: &AxisMap, log_min: f64, log_max: f64) {
        let k_lo = (log_min - 1e-9).ceil() as i64;
        let k_hi = (log_max + 1e-9).floor() as i64;
        if k_lo > k_hi {
            self.x_tick(xm, log_min, &format!("{:.0}", 10f64.powf(log_min)));
            self.x_tick(xm, log_max, &format!("{:.0}", 10f64.powf(log_max)));
            return;
        }
        for k in k_lo..=k_hi {
            let label = if (0..=9).contains(&k) {
                format!("{}", 10u64.pow(k as u32))
            } else {
                format!("1e{k}")
            };
            self.x_tick(xm, k as f64, &label);
        }
    }

    fn linear_x_ticks(&mut self, xm: &AxisMap) {
        for i in 0..=4 {
            let v = xm.d0 + (xm.d1 - xm.d0) * i as f64 / 4.0;
            self.x_tick(xm, v, &format!("{v:.2}"));
        }
    }

    fn y_ticks(&mut self, ym: &AxisMap) {
        let (lo, hi) = (ym.d0, ym.d1);
        let step = nice_step(hi - lo);
        let decimals = step_decimals(step);
        let k_lo = (lo / step - 1e-9).ceil() as i64;
        let k_hi = (hi / step + 1e-9).floor() as i64;
        for k in k_lo..=k_hi {
            let v = k as f64 * step;
            let y = ym.map(v);
            self.out.push_str(&format!(
                "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#dddddd\" stroke-width=\"1\" class=\"grid\"/>\n",
                x1 = px(MARGIN_LEFT),
                x2 = px(self.plot_right()),
                y = px(y)
            ));
            self.out.push_str(&format!(
                "<text x=\"{x}\" y=\"{ty}\" text-anchor=\"end\" font-size=\"11\" fill=\"#333333\">{v:.decimals$}</text>\n",
                x = px(MARGIN_LEFT - 6.0),
                ty = px(y + 3.5),
            ));
        }
    }

    fn ref_line(&mut self, xm: &AxisMap, ym: &AxisMap, value: f64, label: &str) {
        let y = ym.map(value);
        self.out.push_str(&format!(
            "<line class=\"ref\" x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"5 3\"/>\n",
            x1 = px(xm.p0),
            x2 = px(xm.p1),
            y = px(y)
        ));
        self.out.push_str(&format!(
            "<text x=\"{x}\" y=\"{ty}\" font-size=\"10\" fill=\"#888888\">{label}</text>\n",
            x = px(xm.p0 + 4.0),
            ty = px(y - 4.0),
            label = escape_xml(label)
        ));
    }

    fn diagonal(&mut self, xm: &AxisMap, ym: &AxisMap, x_min: f64, x_max: f64) {
        self.out.push_str(&format!(
            "<line class=\"diagonal\" x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"5 3\"/>\n",
            x1 = px(xm.map(x_min)),
            y1 = px(ym.map(x_min)),
            x2 = px(xm.map(x_max)),
            y2 = px(ym.map(x_max))
        ));
    }

    fn band(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", px(x), px(y))).collect();
        self.out.push_str(&format!(
            "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            coords.join(" ")
        ));
    }

    fn curve(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", px(x), px(y))).collect();
        self.out.push_str(&format!(
            "<polyline class=\"curve\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            coords.join(" ")
        ));
        for &(x, y) in pts {
            self.out.push_str(&format!(
                "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                px(x),
                px(y)
            ));
        }
    }

    fn legend(
        &mut self,
        curves: &[&CalibratedCurve],
        methods: &[String],
        style_seed: u64,
        ccis: &BTreeMap<String, Option<f64>>,
    ) {
        let x0 = self.plot_right() + 10.0;
        for (i, curve) in curves.iter().enumerate() {
            let y = MARGIN_TOP + 10.0 + i as f64 * 18.0;
            let color = color_for(methods, curve.method(), style_seed);
            self.out.push_str(&format!(
                "<line x1=\"{x1}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                x1 = px(x0),
                x2 = px(x0 + 18.0),
                y = px(y)
            ));
            let label = match ccis.get(curve.method()) {
                Some(Some(cci)) => {
                    let v = if *cci == 0.0 { 0.0 } else { *cci };
                    format!("{} (CCI={v:.2})", curve.method())
                }
                Some(None) => format!("{} (CCI=n/a)", curve.method()),
                None => curve.method().to_string(),
            };
            self.out.push_str(&format!(
                "<text class=\"legend\" x=\"{x}\" y=\"{ty}\" font-size=\"11\" fill=\"#111111\">{label}</text>\n",
                x = px(x0 + 24.0),
                ty = px(y + 3.5),
                label = escape_xml(&label)
            ));
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.abs().log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if raw <= m * mag {
            return m * mag;
        }
    }
    10.0 * mag
}

fn step_decimals(step: f64) -> usize {
    let mut decimals = 0usize;
    let mut s = step;
    while decimals < 6 && (s - s.round()).abs() > 1e-9 {
        s *= 10.0;
        decimals += 1;
    }
    decimals
}

/// Markdown and CSV views of the same summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableOutput {
    pub markdown: String,
    pub csv: String,
}

/// Renders one row per (task, method): the calibration anchors, the
/// calibrated risk and relative improvement at each measured regime, and the
/// CCI. All real values use fixed 4-decimal formatting with half-to-even
/// rounding. Rows are ordered by task, scratch first, then methods
/// lexicographically.
pub fn render_table(
    curves: &[CalibratedCurve],
    baselines: &[BaselineSet],
    ccis: &BTreeMap<(String, String), f64>,
) -> TableOutput {
    let grid: BTreeSet<u64> = curves
        .iter()
        .flat_map(|c| c.points().iter().map(|p| p.n))
        .collect();

    let mut header: Vec<String> = vec![
        "task".into(),
        "method".into(),
        "blind_risk".into(),
        "max_risk".into(),
    ];
    for &n in &grid {
        header.push(format!("cr@{n}"));
    }
    for &n in &grid {
        header.push(format!("ri@{n}"));
    }
    header.push("cci".into());

    let baselines_by_task: BTreeMap<&str, &BaselineSet> =
        baselines.iter().map(|b| (b.task(), b)).collect();
    let mut by_task: BTreeMap<&str, Vec<&CalibratedCurve>> = BTreeMap::new();
    for curve in curves {
        by_task.entry(curve.task()).or_default().push(curve);
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (task, mut task_curves) in by_task {
        task_curves.sort_by(|a, b| {
            let a_scratch = a.method() == SCRATCH_METHOD;
            let b_scratch = b.method() == SCRATCH_METHOD;
            b_scratch.cmp(&a_scratch).then(a.method().cmp(b.method()))
        });
        let scratch = task_curves
            .iter()
            .find(|c| c.method() == SCRATCH_METHOD)
            .copied();
        for curve in &task_curves {
            let mut row = vec![task.to_string(), curve.method().to_string()];
            match baselines_by_task.get(task) {
                Some(b) => {
                    row.push(format_fixed4(b.blind().value()));
                    row.push(format_fixed4(b.max_supervision().value()));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
            for &n in &grid {
                row.push(curve.at(n).map(|cr| format_fixed4(cr.value())).unwrap_or_default());
            }
            for &n in &grid {
                let ri = match (curve.at(n), scratch.and_then(|s| s.at(n))) {
                    (Some(cr_f), Some(cr_s)) => {
                        metrics::relative_improvement(cr_f, cr_s).ok().map(format_fixed4)
                    }
                    _ => None,
                };
                row.push(ri.unwrap_or_default());
            }
            let cci = ccis
                .get(&(task.to_string(), curve.method().to_string()))
                .map(|&v| format_fixed4(v));
            row.push(cci.unwrap_or_default());
            rows.push(row);
        }
    }

    let mut markdown = String::new();
    markdown.push_str(&markdown_row(&header));
    markdown.push_str(&markdown_row(
        &header.iter().map(|_| "---".to_string()).collect::<Vec<_>>(),
    ));
    for row in &rows {
        markdown.push_str(&markdown_row(row));
    }

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(&header).expect("in-memory write cannot fail");
    for row in &rows {
        writer.write_record(row).expect("in-memory write cannot fail");
    }
    let csv = String::from_utf8(writer.into_inner().expect("in-memory flush cannot fail"))
        .expect("CSV output is UTF-8");

    TableOutput { markdown, csv }
}

fn markdown_row(cells: &[String]) -> String {
    let escaped: Vec<String> = cells.iter().map(|c| c.replace('|', "\\|")).collect();
    format!("| {} |\n", escaped.join(" | "))
}

/// Formats a value with exactly four decimal places, rounding half to even
/// on the decimal representation (0.00005 rounds to 0.0000, 0.00015 to
/// 0.0002).
pub fn format_fixed4(value: f64) -> String {
    round_decimal(&format!("{value}"), 4)
}

fn round_decimal(repr: &str, places: usize) -> String {
    let (sign, digits) = match repr.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", repr),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let mut int_digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let mut frac_digits: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();

    if frac_digits.len() > places {
        let rest = frac_digits.split_off(places);
        let round_up = match rest[0].cmp(&5) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => {
                if rest[1..].iter().any(|&d| d != 0) {
                    true
                } else {
                    // exact tie: round to even
                    let last = frac_digits.last().copied().or_else(|| int_digits.last().copied());
                    last.map(|d| d % 2 == 1).unwrap_or(false)
                }
            }
        };
        if round_up {
            let mut carry = 1u8;
            for d in frac_digits.iter_mut().rev() {
                let sum = *d + carry;
                *d = sum % 10;
                carry = sum / 10;
                if carry == 0 {
                    break;
                }
            }
            if carry > 0 {
                for d in int_digits.iter_mut().rev() {
                    let sum = *d + carry;
                    *d = sum % 10;
                    carry = sum / 10;
                    if carry == 0 {
                        break;
                    }
                }
                if carry > 0 {
                    int_digits.insert(0, carry);
                }
            }
        }
    }
    while frac_digits.len() < places {
        frac_digits.push(0);
    }

    let all_zero = int_digits.iter().all(|&d| d == 0) && frac_digits.iter().all(|&d| d == 0);
    let sign = if all_zero { "" } else { sign };
    let int_str: String = if int_digits.is_empty() {
        "0".to_string()
    } else {
        int_digits.iter().map(|&d| (d + b'0') as char).collect()
    };
    let frac_str: String = frac_digits.iter().map(|&d| (d + b'0') as char).collect();
    format!("{sign}{int_str}.{frac_str}")
}
