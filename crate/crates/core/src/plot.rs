//! Minimal SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Axes {
    pub log_x: bool,
    pub log_y: bool,
}

fn transform(v: f64, log: bool) -> Option<f64> {
    match (log, v.is_finite()) {
        (_, false) => None,
        (true, _) if v <= 0.0 => None,
        (true, _) => Some(v.log10()),
        (false, _) => Some(v),
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Renders the series as polylines. Points that cannot be shown (non-finite,
/// or non-positive on a log axis) are skipped.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], axes: Axes) -> String {
    let visible: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter_map(|&(x, y)| Some((transform(x, axes.log_x)?, transform(y, axes.log_y)?))).collect())
        .collect();
    let (x0, x1) = range(visible.iter().flatten().map(|p| p.0));
    let (y0, y1) = range(visible.iter().flatten().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let label = |v: f64, log: bool| if log { format!("1e{v:.1}") } else { format!("{v:.3e}") };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}">{}</text>"#, HEIGHT - MARGIN + 16.0, label(x0, axes.log_x));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, label(x1, axes.log_x));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, HEIGHT - MARGIN, label(y0, axes.log_y));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, MARGIN - 4.0, MARGIN + 8.0, label(y1, axes.log_y));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(svg, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0, escape(y_label));
    for (i, (s, pts)) in series.iter().zip(&visible).enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#, WIDTH - MARGIN + 4.0, MARGIN + 14.0 * (i as f64 + 1.0), escape(&s.name));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_svg(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], axes: Axes) -> Result<()> {
    std::fs::write(path, render_svg(title, x_label, y_label, series, axes))?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
