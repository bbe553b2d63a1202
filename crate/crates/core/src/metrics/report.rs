use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::confusion::ConfusionMatrix;
use super::curves::{CurveKind, CurveSeries};
use super::evaluate::{MetricsReport, TaskMetrics};
use super::matching::IouKind;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "class,images,instances,box_p,box_r,box_map50,box_map50_95,mask_p,mask_r,mask_map50,mask_map50_95";

fn task_cells(m: &TaskMetrics) -> String {
    format!("{},{},{},{}", m.precision, m.recall, m.map50, m.map50_95)
}

// Class names come from the descriptor and may not contain whitespace, but
// could still contain commas or quotes.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_csv(report: &MetricsReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(&row.class),
            row.images,
            row.instances,
            task_cells(&row.boxes),
            task_cells(&row.masks)
        );
    }
    out
}

pub fn confusion_csv(matrix: &ConfusionMatrix, has_images: bool) -> String {
    let mut out = String::from("true\\predicted");
    for name in &matrix.class_names {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push_str(",background\n");
    if !has_images {
        return out;
    }
    let labels = matrix.class_names.iter().map(String::as_str).chain(["background"]);
    for (label, row) in labels.zip(&matrix.counts) {
        out.push_str(&csv_field(label));
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

fn task_name(t: IouKind) -> &'static str {
    match t {
        IouKind::Box => "box",
        IouKind::Mask => "mask",
    }
}

pub fn curve_csv(kind: CurveKind, curves: &[CurveSeries]) -> String {
    let (xl, yl) = kind.axis_labels();
    let mut out = format!("task,series,{xl},{yl}\n");
    for s in curves.iter().filter(|s| s.kind == kind) {
        let label = csv_field(&s.label);
        for (x, y) in &s.points {
            let _ = writeln!(out, "{},{label},{x:.6},{y:.6}", task_name(s.task));
        }
    }
    out
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line plot on the unit square. Box series are solid (per class plus a
/// thick "all"); the mask "all" series is dashed.
pub fn curve_svg(kind: CurveKind, curves: &[CurveSeries]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const L: f64 = 60.0;
    const R: f64 = 160.0;
    const T: f64 = 30.0;
    const B: f64 = 50.0;
    let pw = W - L - R;
    let ph = H - T - B;
    let sx = |x: f64| L + x.clamp(0.0, 1.0) * pw;
    let sy = |y: f64| T + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let (xl, yl) = kind.axis_labels();

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"##,
            sx(v),
            T,
            sx(v),
            T + ph,
            sx(v),
            T + ph + 16.0
        );
        let _ = writeln!(
            out,
            r##"<line x1="{L}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            sy(v),
            L + pw,
            sy(v),
            L - 6.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xl}</text>"#,
        L + pw / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{yl}</text>"#,
        T + ph / 2.0,
        T + ph / 2.0
    );

    let shown: Vec<&CurveSeries> = curves
        .iter()
        .filter(|s| s.kind == kind && (s.task == IouKind::Box || s.label == "all"))
        .collect();
    for (i, s) in shown.iter().enumerate() {
        let all = s.label == "all";
        let color = if all { "#000000" } else { PALETTE[i % PALETTE.len()] };
        let width = if all { 2.5 } else { 1.0 };
        let dash = if s.task == IouKind::Mask { r#" stroke-dasharray="6 4""# } else { "" };
        let mut pts = String::new();
        for (x, y) in &s.points {
            let _ = write!(pts, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{}"/>"#,
            pts.trim_end()
        );
        let ly = T + 14.0 + 16.0 * i as f64;
        let lx = L + pw + 10.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="{width}"{dash}/><text x="{:.1}" y="{:.1}">{} {}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            ly,
            xml_escape(&s.label),
            task_name(s.task)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `report.csv`, `confusion_matrix.csv` and a CSV and SVG per curve
/// kind into `out_dir` (created if missing). Returns the written paths.
pub fn write_report(
    report: &MetricsReport,
    matrix: &ConfusionMatrix,
    curves: &[CurveSeries],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        ("report.csv".to_string(), report_csv(report)),
        ("confusion_matrix.csv".to_string(), confusion_csv(matrix, report.num_images > 0)),
    ];
    for kind in CurveKind::ALL {
        files.push((format!("curve_{}.csv", kind.name()), curve_csv(kind, curves)));
        files.push((format!("curve_{}.svg", kind.name()), curve_svg(kind, curves)));
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Fixed-width rendering of the report for terminals.
pub fn format_table(report: &MetricsReport) -> String {
    let width = report.rows.iter().map(|r| r.class.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} {:>7} {:>9} | {:>7} {:>7} {:>7} {:>9} | {:>7} {:>7} {:>7} {:>9}",
        "Class", "Images", "Instances", "Box P", "R", "mAP50", "mAP50-95", "Mask P", "R", "mAP50", "mAP50-95"
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<width$} {:>7} {:>9} | {:>7.3} {:>7.3} {:>7.3} {:>9.3} | {:>7.3} {:>7.3} {:>7.3} {:>9.3}",
            r.class,
            r.images,
            r.instances,
            r.boxes.precision,
            r.boxes.recall,
            r.boxes.map50,
            r.boxes.map50_95,
            r.masks.precision,
            r.masks.recall,
            r.masks.map50,
            r.masks.map50_95
        );
    }
    let _ = writeln!(
        out,
        "P/R read at confidence {:.3} (box), {:.3} (mask)",
        report.box_conf_threshold, report.mask_conf_threshold
    );
    out
}
