//! Results table: CSV round-trip, aligned text rendering and SVG bar charts.

use std::fmt::Write as _;
use std::str::FromStr;

use aiin_core::gantrain::ExperimentRow;

use crate::error::{CliError, CliResult};

pub const HEADER: &str =
    "augmentation,batch_size,window,threshold,msssim_delta,fid,accuracy,precision,recall,specificity";

const MISSING: &str = "N/A";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportTable {
    pub rows: Vec<ExperimentRow>,
}

/// Numeric columns that can be charted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    BatchSize,
    Threshold,
    MsssimDelta,
    Fid,
    Accuracy,
    Precision,
    Recall,
    Specificity,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::BatchSize,
        Metric::Threshold,
        Metric::MsssimDelta,
        Metric::Fid,
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::Specificity,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Metric::BatchSize => "batch_size",
            Metric::Threshold => "threshold",
            Metric::MsssimDelta => "msssim_delta",
            Metric::Fid => "fid",
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Specificity => "specificity",
        }
    }

    /// Missing thresholds chart as 0.
    pub fn value(self, row: &ExperimentRow) -> f64 {
        match self {
            Metric::BatchSize => row.batch_size as f64,
            Metric::Threshold => row.threshold.map_or(0.0, f64::from),
            Metric::MsssimDelta => row.msssim_delta,
            Metric::Fid => row.fid,
            Metric::Accuracy => row.accuracy,
            Metric::Precision => row.precision,
            Metric::Recall => row.recall,
            Metric::Specificity => row.specificity,
        }
    }
}

impl FromStr for Metric {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Metric::ALL.into_iter().find(|m| m.column() == s).ok_or_else(|| {
            let names: Vec<_> = Metric::ALL.iter().map(|m| m.column()).collect();
            CliError::Usage(format!("unknown numeric column '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

fn parse_field<T: FromStr>(line: usize, name: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::Data(format!("rows CSV line {line}: bad {name} '{v}'")))
}

fn optional(v: &str) -> Option<&str> {
    (v != MISSING && !v.is_empty()).then_some(v)
}

impl ReportTable {
    pub fn new(rows: Vec<ExperimentRow>) -> Self {
        ReportTable { rows }
    }

    /// Floats are written in shortest round-trip form so parsing is lossless.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for r in &self.rows {
            let threshold = r.threshold.map_or(MISSING.to_string(), |t| t.to_string());
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.augmentation,
                r.batch_size,
                r.window.as_deref().unwrap_or(MISSING),
                threshold,
                r.msssim_delta,
                r.fid,
                r.accuracy,
                r.precision,
                r.recall,
                r.specificity
            )
            .unwrap();
        }
        out
    }

    pub fn parse_csv(text: &str) -> CliResult<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            Some((_, h)) => return Err(CliError::Data(format!("rows CSV header mismatch: expected '{HEADER}', found '{h}'"))),
            None => return Err(CliError::Data("rows CSV is empty".into())),
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(CliError::Data(format!("rows CSV line {n}: expected 10 fields, found {}", f.len())));
            }
            if f[0].is_empty() {
                return Err(CliError::Data(format!("rows CSV line {n}: empty augmentation tag")));
            }
            rows.push(ExperimentRow {
                augmentation: f[0].to_string(),
                batch_size: parse_field(n, "batch_size", f[1])?,
                window: optional(f[2]).map(str::to_string),
                threshold: optional(f[3]).map(|t| parse_field(n, "threshold", t)).transpose()?,
                msssim_delta: parse_field(n, "msssim_delta", f[4])?,
                fid: parse_field(n, "fid", f[5])?,
                accuracy: parse_field(n, "accuracy", f[6])?,
                precision: parse_field(n, "precision", f[7])?,
                recall: parse_field(n, "recall", f[8])?,
                specificity: parse_field(n, "specificity", f[9])?,
            });
        }
        Ok(ReportTable { rows })
    }

    /// Fixed-width table with the diversity delta shown signed.
    pub fn to_text(&self) -> String {
        let head = ["Augmentation", "Batch", "Window", "CT", "dMS-SSIM", "FID", "Acc", "Prec", "Rec", "Spec"];
        let body: Vec<[String; 10]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.augmentation.clone(),
                    r.batch_size.to_string(),
                    r.window.clone().unwrap_or_else(|| MISSING.into()),
                    r.threshold.map_or(MISSING.into(), |t| t.to_string()),
                    format!("{:+.3}", r.msssim_delta),
                    format!("{:.3}", r.fid),
                    format!("{:.2}", r.accuracy),
                    format!("{:.2}", r.precision),
                    format!("{:.2}", r.recall),
                    format!("{:.2}", r.specificity),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[&str]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        line(&head);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &body {
            line(&row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn row_label(r: &ExperimentRow) -> String {
    let mut label = format!("{} b{}", r.augmentation, r.batch_size);
    if let Some(w) = &r.window {
        write!(label, " {w}").unwrap();
    }
    if let Some(t) = r.threshold {
        write!(label, "/{t}").unwrap();
    }
    label
}

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];
const PLOT_HEIGHT: f64 = 200.0;
const SLOT: f64 = 48.0;
const BAR: f64 = 32.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;

/// Bar chart of one numeric column, one bar per row in table order, bars
/// colored by augmentation. Bar heights are proportional to `|value|` and
/// measured from the zero line.
pub fn emit_svg_bars(table: &ReportTable, metric: Metric) -> CliResult<String> {
    if table.rows.is_empty() {
        return Err(CliError::Data("cannot chart an empty table".into()));
    }
    let values: Vec<f64> = table.rows.iter().map(|r| metric.value(r)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Data(format!("column {} has non-finite values", metric.column())));
    }
    let hi = values.iter().copied().fold(0.0f64, f64::max);
    let lo = values.iter().copied().fold(0.0f64, f64::min);
    let span = hi - lo;
    let scale = if span > 0.0 { PLOT_HEIGHT / span } else { 0.0 };
    let zero_y = TOP + hi * scale;
    let width = LEFT + SLOT * values.len() as f64 + 20.0;
    let height = TOP + PLOT_HEIGHT + 90.0;

    let mut tags: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !tags.contains(&r.augmentation.as_str()) {
            tags.push(&r.augmentation);
        }
    }

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{} by variant</text>"#,
        width / 2.0,
        escape(metric.column())
    )
    .unwrap();
    // axes
    writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, TOP + PLOT_HEIGHT).unwrap();
    writeln!(s, r#"<line x1="{LEFT}" y1="{zero_y}" x2="{}" y2="{zero_y}" stroke="black"/>"#, width - 20.0).unwrap();
    for (v, y) in [(hi, TOP), (lo, TOP + PLOT_HEIGHT)] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            LEFT - 4.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="16" y="{y}" transform="rotate(-90 16 {y})" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        escape(metric.column()),
        y = TOP + PLOT_HEIGHT / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">variant</text>"#,
        LEFT + SLOT * values.len() as f64 / 2.0,
        height - 8.0
    )
    .unwrap();

    for (i, (row, &v)) in table.rows.iter().zip(&values).enumerate() {
        let x = LEFT + SLOT * i as f64 + (SLOT - BAR) / 2.0;
        let h = v.abs() * scale;
        let y = if v >= 0.0 { zero_y - h } else { zero_y };
        let color = PALETTE[tags.iter().position(|t| *t == row.augmentation).unwrap() % PALETTE.len()];
        writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{BAR}" height="{h}" fill="{color}" data-value="{v}"><title>{}: {v}</title></rect>"#,
            escape(&row_label(row))
        )
        .unwrap();
        let cx = x + BAR / 2.0;
        let ly = TOP + PLOT_HEIGHT + 14.0;
        writeln!(
            s,
            r#"<text x="{cx}" y="{ly}" transform="rotate(35 {cx} {ly})" font-family="sans-serif" font-size="10">{}</text>"#,
            escape(&row_label(row))
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}
