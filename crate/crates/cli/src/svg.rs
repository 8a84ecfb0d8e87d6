//! Minimal line charts: fixed 800x600 viewBox, panels stacked vertically,
//! one polyline per series.

use std::fmt::Write;

use crate::format::fmt_num;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 40.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

/// `(lo, hi, ticks)` covering `[min, max]` with steps of 1, 2 or 5 times a
/// power of ten.
fn linear_ticks(min: f64, max: f64) -> (f64, f64, Vec<f64>) {
    let (min, max) = if max > min {
        (min, max)
    } else {
        (min - 0.5, min + 0.5)
    };
    let raw = (max - min) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let lo = (min / step).floor() * step;
    let hi = (max / step).ceil() * step;
    let count = ((hi - lo) / step).round() as usize;
    let ticks = (0..=count).map(|i| lo + i as f64 * step).collect();
    (lo, hi, ticks)
}

/// Decade ticks in log10 units.
fn log_ticks(min: f64, max: f64) -> (f64, f64, Vec<f64>) {
    let lo = min.log10().floor();
    let hi = max.log10().ceil().max(lo + 1.0);
    let ticks = (lo as i32..=hi as i32).map(f64::from).collect();
    (lo, hi, ticks)
}

fn tick_label(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    fmt_num(r)
}

fn render_panel(out: &mut String, panel: &Panel, top: f64, height: f64) {
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let bottom = top + height - MARGIN_Y;
    let plot_top = top + MARGIN_Y * 0.75;

    let ty = |y: f64| if panel.log_y { y.log10() } else { y };
    let points: Vec<(f64, f64)> = panel
        .series
        .iter()
        .flat_map(|s| s.xs.iter().zip(&s.ys).map(|(&x, &y)| (x, y)))
        .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!panel.log_y || y > 0.0))
        .collect();
    let fold = |f: fn(&(f64, f64)) -> f64| {
        points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            })
    };
    let (xmin, xmax) = fold(|p| p.0);
    let (ymin, ymax) = fold(|p| p.1);
    if points.is_empty() {
        return;
    }
    let (x0, x1, xt) = linear_ticks(xmin, xmax);
    let (y0, y1, yt) = if panel.log_y {
        log_ticks(ymin, ymax)
    } else {
        linear_ticks(ymin, ymax)
    };
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let py = |y: f64| bottom - (ty(y) - y0) / (y1 - y0) * (bottom - plot_top);
    let py_raw = |t: f64| bottom - (t - y0) / (y1 - y0) * (bottom - plot_top);

    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"##,
        (left + right) / 2.0,
        top + 18.0,
        panel.title
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{plot_top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#000"/>"##,
        right - left,
        bottom - plot_top
    );
    for &t in &xt {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{bottom:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"##,
            bottom + 5.0,
            bottom + 16.0,
            tick_label(t)
        );
    }
    for &t in &yt {
        let y = py_raw(t);
        let label = if panel.log_y {
            format!("1e{}", t as i32)
        } else {
            tick_label(t)
        };
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{left:.1}" y2="{y:.1}" stroke="#000"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{label}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 3.0
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"##,
        (left + right) / 2.0,
        bottom + 32.0,
        panel.x_label
    );

    for (i, s) in panel.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            s.xs.iter()
                .zip(&s.ys)
                .filter(|&(&x, &y)| x.is_finite() && y.is_finite() && (!panel.log_y || y > 0.0))
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"##,
            pts.join(" ")
        );
        let ly = plot_top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"##,
            right + 10.0,
            right + 30.0,
            right + 35.0,
            ly + 4.0,
            s.label
        );
    }
}

/// SVG document with `panels` stacked top to bottom.
pub fn render(panels: &[Panel]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    let h = HEIGHT / panels.len().max(1) as f64;
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, i as f64 * h, h);
    }
    out.push_str("</svg>\n");
    out
}
