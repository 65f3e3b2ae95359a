//! Minimal SVG line plots and heatmaps.
//!
//! Coordinates are printed with two decimals, so identical inputs produce
//! identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            xs,
            ys,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Axis { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            return Axis { lo: lo - pad, hi: hi + pad };
        }
        Axis { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, x: Axis, y: Axis, x_label: &str, y_label: &str) {
    let (left, right, top, bottom) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{left:.2},{top:.2} L{left:.2},{bottom:.2} L{right:.2},{bottom:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let px = left + f * (right - left);
        let py = bottom - f * (bottom - top);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick(x.lo + f * (x.hi - x.lo))
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick(y.lo + f * (y.hi - y.lo))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
}

/// Polylines sharing one pair of axes. Non-finite points break the line.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let x = Axis::fit(series.iter().flat_map(|s| s.xs.iter().copied()));
    let y = Axis::fit(series.iter().flat_map(|s| s.ys.iter().copied()));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, x, y, x_label, y_label);
    let (left, right, top, bottom) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (&vx, &vy) in s.xs.iter().zip(&s.ys) {
            if !(vx.is_finite() && vy.is_finite()) {
                pen_down = false;
                continue;
            }
            let px = left + x.frac(vx) * (right - left);
            let py = bottom - y.frac(vy) * (bottom - top);
            let _ = write!(path, "{}{px:.2},{py:.2} ", if pen_down { "L" } else { "M" });
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            path.trim_end()
        );
        let ly = top + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right - 150.0,
            ly - 4.0,
            right - 130.0,
            ly - 4.0,
            right - 125.0,
            ly,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Cells `values[row][col]` on a regular grid; `None` cells are drawn grey.
/// Rows run along y (bottom to top), columns along x.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64), values: &[Vec<Option<f64>>]) -> String {
    let colors = Axis::fit(values.iter().flatten().filter_map(|v| *v));
    let mut out = String::new();
    header(&mut out, title);
    let (left, right, top, bottom) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT - 60.0, MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let rows = values.len().max(1);
    let cols = values.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let cw = (right - left) / cols as f64;
    let ch = (bottom - top) / rows as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let fill = match v {
                Some(v) if v.is_finite() => ramp(colors.frac(*v).clamp(0.0, 1.0)),
                _ => "#d0d0d0".to_string(),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                left + c as f64 * cw,
                bottom - (r as f64 + 1.0) * ch,
                cw + 0.01,
                ch + 0.01
            );
        }
    }
    axes(
        &mut out,
        Axis { lo: x_range.0, hi: x_range.1 },
        Axis { lo: y_range.0, hi: y_range.1 },
        x_label,
        y_label,
    );
    // Color bar.
    let bx = right + 20.0;
    for i in 0..20 {
        let f = i as f64 / 19.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.2}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            bottom - (i as f64 + 1.0) * (bottom - top) / 20.0,
            (bottom - top) / 20.0 + 0.01,
            ramp(f)
        );
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bx, top - 4.0, tick(colors.hi));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, bx, bottom + 14.0, tick(colors.lo));
    out.push_str("</svg>\n");
    out
}

/// Dark blue through white to dark red.
fn ramp(f: f64) -> String {
    let (r, g, b) = if f < 0.5 {
        let s = f / 0.5;
        (30.0 + 225.0 * s, 60.0 + 195.0 * s, 160.0 + 95.0 * s)
    } else {
        let s = (f - 0.5) / 0.5;
        (255.0 - 75.0 * s, 255.0 - 215.0 * s, 255.0 - 215.0 * s)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}
