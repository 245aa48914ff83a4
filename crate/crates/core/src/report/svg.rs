//! Minimal static SVG charts.
//!
//! The only numbers drawn as text are axis extremes and bar values, all
//! formatted with [`num`](super::num) so they match the data files.

use std::fmt::Write as _;

use super::num;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

struct Doc {
    body: String,
}

impl Doc {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
        );
        let _ = writeln!(body, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="28" font-size="18" text-anchor="middle">{}</text>"#,
            width / 2.0,
            escape(title)
        );
        Doc { body }
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            w.max(0.0),
            h.max(0.0)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Maps `[lo, hi]` onto `[a, b]`; a zero-width domain maps to the middle.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        0.5 * (a + b)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Multi-series line chart over categorical x labels (dates).
pub fn line_chart(title: &str, y_label: &str, x_labels: &[String], series: &[Series]) -> String {
    let mut doc = Doc::new(WIDTH, HEIGHT, title);
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let (lo, hi) = extent(series.iter().flat_map(|s| s.values.iter().copied()));
    let last = x_labels.len().saturating_sub(1) as f64;

    doc.line(x0, y0, x1, y0, "black");
    doc.line(x0, y0, x0, y1, "black");
    if lo.is_finite() {
        doc.text(x0 - 6.0, y0, "end", 11, &num(lo));
        doc.text(x0 - 6.0, y1 + 4.0, "end", 11, &num(hi));
    }
    if let (Some(first), Some(end)) = (x_labels.first(), x_labels.last()) {
        doc.text(x0, y0 + 18.0, "start", 11, first);
        doc.text(x1, y0 + 18.0, "end", 11, end);
    }
    doc.text((x0 + x1) / 2.0, HEIGHT - 15.0, "middle", 12, "week");
    doc.text(18.0, (y0 + y1) / 2.0, "middle", 12, y_label);

    for (i, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s
            .values
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                (
                    scale(j as f64, 0.0, last, x0, x1),
                    scale(v, lo, hi, y0, y1),
                )
            })
            .collect();
        doc.polyline(&pts, color(i));
        let ly = MARGIN_TOP + 12.0 * i as f64;
        doc.line(x1 + 12.0, ly, x1 + 28.0, ly, color(i));
        doc.text(x1 + 32.0, ly + 4.0, "start", 10, s.label);
    }
    doc.finish()
}

pub struct HistogramPanel<'a> {
    pub label: &'a str,
    /// `(lower, upper, count)` per bin.
    pub bins: &'a [(f64, f64, usize)],
}

/// Grid of histograms, one panel per column.
pub fn histogram_grid(title: &str, panels: &[HistogramPanel]) -> String {
    let cols = 4usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (260.0, 190.0);
    let width = pw * cols as f64 + 20.0;
    let height = ph * rows as f64 + 60.0;
    let mut doc = Doc::new(width, height, title);
    for (i, p) in panels.iter().enumerate() {
        let ox = 10.0 + pw * (i % cols) as f64;
        let oy = 50.0 + ph * (i / cols) as f64;
        let (x0, x1) = (ox + 40.0, ox + pw - 15.0);
        let (y0, y1) = (oy + ph - 40.0, oy + 25.0);
        doc.text((ox + pw / 2.0).round(), oy + 14.0, "middle", 11, p.label);
        doc.line(x0, y0, x1, y0, "black");
        doc.line(x0, y0, x0, y1, "black");
        let max_count = p.bins.iter().map(|b| b.2).max().unwrap_or(0);
        let n = p.bins.len().max(1) as f64;
        let bw = (x1 - x0) / n;
        for (j, &(_, _, count)) in p.bins.iter().enumerate() {
            let top = scale(count as f64, 0.0, max_count as f64, y0, y1);
            let top = if max_count == 0 { y0 } else { top };
            doc.rect(x0 + bw * j as f64 + 0.5, top, bw - 1.0, y0 - top, color(0));
        }
        if let (Some(first), Some(last)) = (p.bins.first(), p.bins.last()) {
            doc.text(x0, y0 + 14.0, "start", 9, &num(first.0));
            doc.text(x1, y0 + 14.0, "end", 9, &num(last.1));
        }
        doc.text(x0 - 4.0, y1 + 4.0, "end", 9, &max_count.to_string());
    }
    doc.finish()
}

/// Line plot of `(x, y)` points with numeric axes; every point is marked.
pub fn xy_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let mut doc = Doc::new(WIDTH, HEIGHT, title);
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let (xlo, xhi) = extent(points.iter().map(|p| p.0));
    let (ylo, yhi) = extent(points.iter().map(|p| p.1));
    doc.line(x0, y0, x1, y0, "black");
    doc.line(x0, y0, x0, y1, "black");
    if !points.is_empty() {
        doc.text(x0, y0 + 18.0, "start", 11, &num(xlo));
        doc.text(x1, y0 + 18.0, "end", 11, &num(xhi));
        doc.text(x0 - 6.0, y0, "end", 11, &num(ylo));
        doc.text(x0 - 6.0, y1 + 4.0, "end", 11, &num(yhi));
    }
    doc.text((x0 + x1) / 2.0, HEIGHT - 15.0, "middle", 12, x_label);
    doc.text(18.0, (y0 + y1) / 2.0, "middle", 12, y_label);
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (scale(x, xlo, xhi, x0, x1), scale(y, ylo, yhi, y0, y1)))
        .collect();
    doc.polyline(&pts, color(0));
    for (x, y) in pts {
        let _ = writeln!(
            doc.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"#,
            color(0)
        );
    }
    doc.finish()
}

pub struct BarGroup<'a> {
    pub label: &'a str,
    pub values: Vec<f64>,
}

/// Grouped bar chart; each bar carries its value as a label.
pub fn bar_chart(title: &str, y_label: &str, legend: &[&str], groups: &[BarGroup]) -> String {
    let mut doc = Doc::new(WIDTH, HEIGHT, title);
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP + 20.0);
    let (lo, hi) = extent(groups.iter().flat_map(|g| g.values.iter().copied()));
    let (lo, hi) = (lo.min(0.0), hi.max(0.0));
    let zero = scale(0.0, lo, hi, y0, y1);
    doc.line(x0, y0, x0, y1, "black");
    doc.line(x0, zero, x1, zero, "black");
    doc.text(18.0, (y0 + y1) / 2.0, "middle", 12, y_label);
    let slot = (x1 - x0) / groups.len().max(1) as f64;
    for (g, group) in groups.iter().enumerate() {
        let gx = x0 + slot * g as f64;
        let bw = slot * 0.8 / group.values.len().max(1) as f64;
        for (b, &v) in group.values.iter().enumerate() {
            let bx = gx + slot * 0.1 + bw * b as f64;
            let top = scale(v, lo, hi, y0, y1);
            let (y, h) = if v >= 0.0 { (top, zero - top) } else { (zero, top - zero) };
            doc.rect(bx, y, bw - 2.0, h, color(b));
            let label_y = if v >= 0.0 { top - 4.0 } else { top + 12.0 };
            doc.text(bx + bw / 2.0, label_y, "middle", 10, &num(v));
        }
        doc.text(gx + slot / 2.0, y0 + 18.0, "middle", 11, group.label);
    }
    for (i, name) in legend.iter().enumerate() {
        let ly = MARGIN_TOP + 14.0 * i as f64;
        doc.rect(x1 + 12.0, ly - 8.0, 10.0, 10.0, color(i));
        doc.text(x1 + 28.0, ly + 1.0, "start", 10, name);
    }
    doc.finish()
}
