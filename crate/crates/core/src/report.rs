//! CSV tables and self-contained SVG line charts for experiment output.
//!
//! CSV is the canonical artifact; the SVG charts are plain paths, axis ticks
//! and text, with no external assets, rendered from the same tables. All
//! numbers go through Rust's shortest-roundtrip float formatting, so repeated
//! runs with the same seed emit identical bytes.

use std::fmt::Write as _;

use crate::eval::{ExperimentTable, FigureRow, Method};

/// Experiment summary as `m,method,mean_aurec,q40,q60,trials` lines.
pub fn experiment_csv(table: &ExperimentTable) -> String {
    let mut out = String::from("m,method,mean_aurec,q40,q60,trials\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.m, row.method, row.mean_aurec, row.q40, row.q60, row.trials
        );
    }
    out
}

/// Figure demo table as `x,prediction,uncertainty,threshold,accepted` lines.
pub fn figure_csv(rows: &[FigureRow]) -> String {
    let mut out = String::from("x,prediction,uncertainty,threshold,accepted\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.x, row.prediction, row.uncertainty, row.threshold, row.accepted
        );
    }
    out
}

const CHART_WIDTH: f64 = 840.0;
const CHART_HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn method_color(method: Method) -> &'static str {
    match method {
        Method::PlugIn => "#d62728",
        Method::Bayesian => "#1f77b4",
        Method::Epistemic => "#2ca02c",
        Method::AleatoricOracle => "#7f7f7f",
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-12);
        MARGIN_LEFT + (x - self.x_min) / span * (CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-12);
        CHART_HEIGHT - MARGIN_BOTTOM
            - (y - self.y_min) / span * (CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n"
        ),
        w = CHART_WIDTH,
        h = CHART_HEIGHT,
        tx = (MARGIN_LEFT + CHART_WIDTH - MARGIN_RIGHT) / 2.0,
        title = title,
    )
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str, x_ticks: &[f64]) {
    let x0 = MARGIN_LEFT;
    let x1 = CHART_WIDTH - MARGIN_RIGHT;
    let y0 = CHART_HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for &t in x_ticks {
        let px = frame.px(t);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{t}</text>",
            y0 + 20.0
        );
    }
    for i in 0..=5 {
        let v = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 5.0;
        let py = frame.py(v);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 9.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>",
        (x0 + x1) / 2.0,
        CHART_HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{y_label}</text>",
        (frame.py(frame.y_min) + frame.py(frame.y_max)) / 2.0,
        (frame.py(frame.y_min) + frame.py(frame.y_max)) / 2.0
    );
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let mut path = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", frame.px(*x), frame.py(*y));
    }
    let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
        path.trim_end()
    );
}

fn legend(out: &mut String, entries: &[(&str, &str)]) {
    let lx = CHART_WIDTH - MARGIN_RIGHT + 14.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 18.0 * i as f64 + 8.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"3\"/>",
            lx + 22.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">{label}</text>",
            lx + 28.0,
            y + 4.0
        );
    }
}

/// Mean AuReC against training-set size, one line per method, log-scaled m.
pub fn experiment_svg(table: &ExperimentTable) -> String {
    let mut series: Vec<(Method, Vec<(f64, f64)>)> = Vec::new();
    for method in Method::ALL {
        let pts: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| ((r.m.max(1) as f64).log10(), r.mean_aurec))
            .collect();
        if !pts.is_empty() {
            series.push((method, pts));
        }
    }
    let all_y: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)).collect();
    let all_x: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    let frame = Frame {
        x_min: all_x.iter().cloned().fold(f64::INFINITY, f64::min),
        x_max: all_x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        y_min: 0.0,
        y_max: all_y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * 1.05 + 1e-12,
    };
    let mut out = svg_header("Mean AuReC vs training-set size");
    let ticks: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.m)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|m| (m.max(1) as f64).log10())
        .collect();
    axes(&mut out, &frame, "m (log scale)", "mean AuReC", &ticks);
    // Re-label the x ticks with the raw m values.
    let ms: std::collections::BTreeSet<usize> = table.rows.iter().map(|r| r.m).collect();
    for m in &ms {
        let px = frame.px((*m.max(&1) as f64).log10());
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{}\" width=\"40\" height=\"16\" fill=\"white\"/>",
            px - 20.0,
            CHART_HEIGHT - MARGIN_BOTTOM + 8.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{m}</text>",
            CHART_HEIGHT - MARGIN_BOTTOM + 20.0
        );
    }
    for (method, pts) in &series {
        polyline(&mut out, &frame, pts, method_color(*method), false);
    }
    let entries: Vec<(&str, &str)> = series
        .iter()
        .map(|(m, _)| (m.as_str(), method_color(*m)))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Prediction and uncertainty curves over the demo grid, with the threshold
/// as a dashed rule and accepted spans shaded.
pub fn figure_svg(rows: &[FigureRow], title: &str) -> String {
    assert!(!rows.is_empty(), "figure table is empty");
    let x_min = rows.first().unwrap().x;
    let x_max = rows.last().unwrap().x;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for r in rows {
        y_min = y_min.min(r.prediction).min(r.uncertainty.min(r.threshold));
        y_max = y_max.max(r.prediction).max(r.uncertainty.max(r.threshold));
    }
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let frame = Frame {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let mut out = svg_header(title);

    // Accepted spans as pale green bands behind the curves.
    let mut span_start: Option<f64> = None;
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        match (span_start, r.accepted) {
            (None, true) => span_start = Some(r.x),
            (Some(s), false) => {
                spans.push((s, r.x));
                span_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = span_start {
        spans.push((s, x_max));
    }
    for (s, e) in spans {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{}\" width=\"{:.2}\" height=\"{}\" fill=\"#2ca02c\" opacity=\"0.12\"/>",
            frame.px(s),
            MARGIN_TOP,
            (frame.px(e) - frame.px(s)).max(0.5),
            CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        );
    }

    let ticks: Vec<f64> = (0..=4).map(|i| x_min + (x_max - x_min) * i as f64 / 4.0).collect();
    axes(&mut out, &frame, "x", "value", &ticks);

    let prediction: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.prediction)).collect();
    let uncertainty: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, r.uncertainty)).collect();
    let threshold: Vec<(f64, f64)> = vec![
        (x_min, rows[0].threshold),
        (x_max, rows[0].threshold),
    ];
    polyline(&mut out, &frame, &prediction, "#1f77b4", false);
    polyline(&mut out, &frame, &uncertainty, "#d62728", false);
    polyline(&mut out, &frame, &threshold, "#7f7f7f", true);
    legend(
        &mut out,
        &[
            ("prediction", "#1f77b4"),
            ("uncertainty", "#d62728"),
            ("threshold", "#7f7f7f"),
            ("accepted", "#2ca02c"),
        ],
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{figure_demo_data, run_experiment, ExperimentConfig, FigureKind};

    #[test]
    fn experiment_csv_schema() {
        let config = ExperimentConfig {
            trials: 3,
            m_values: vec![5],
            n_test: 32,
            ..ExperimentConfig::desk_default()
        };
        let table = run_experiment(&config, 1).unwrap();
        let csv = experiment_csv(&table);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,method,mean_aurec,q40,q60,trials"));
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), 4);
        for (line, method) in body.iter().zip(["plug_in", "bayesian", "epistemic", "aleatoric_oracle"]) {
            assert!(line.starts_with(&format!("5,{method},")), "line {line}");
        }
    }

    #[test]
    fn figure_csv_schema_and_svg_wellformedness() {
        let rows = figure_demo_data(FigureKind::Fig1, 1).unwrap();
        let csv = figure_csv(&rows);
        assert!(csv.starts_with("x,prediction,uncertainty,threshold,accepted\n"));
        assert_eq!(csv.lines().count(), rows.len() + 1);

        let svg = figure_svg(&rows, "demo");
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), 3);
        // Two accept flips produce one interior accepted span.
        assert_eq!(svg.matches("opacity=\"0.12\"").count(), 1);
    }

    #[test]
    fn experiment_svg_has_a_line_per_method() {
        let config = ExperimentConfig {
            trials: 2,
            m_values: vec![5, 10],
            n_test: 32,
            ..ExperimentConfig::desk_default()
        };
        let table = run_experiment(&config, 1).unwrap();
        let svg = experiment_svg(&table);
        for method in ["plug_in", "bayesian", "epistemic", "aleatoric_oracle"] {
            assert!(svg.contains(method), "legend misses {method}");
        }
        assert_eq!(svg.matches("<path").count(), 4);
    }
}
