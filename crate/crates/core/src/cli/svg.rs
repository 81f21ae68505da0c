//! Minimal self-contained log-log figures.

use std::fmt::Write;

const PANEL_W: f64 = 440.0;
const PANEL_H: f64 = 340.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Style {
    Points,
    Line,
    Dashed,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// The line `y = y0 (x / x0)^slope` over `[x_lo, x_hi]`.
pub fn reference_line(label: &str, color: &'static str, slope: f64, anchor: (f64, f64), x_lo: f64, x_hi: f64) -> Series {
    let f = |x: f64| anchor.1 * (x / anchor.0).powf(slope);
    Series {
        label: label.into(),
        color,
        style: Style::Dashed,
        points: vec![(x_lo, f(x_lo)), (x_hi, f(x_hi))],
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite() && *v > 0.0) {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = if hi - lo > 2.0 { 1.0 } else { 0.25 };
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 {
        out.push(t);
        t += step;
    }
    out
}

fn tick_label(e: f64) -> String {
    let v = 10f64.powf(e);
    if (e - e.round()).abs() < 1e-9 {
        format!("1e{}", e.round() as i64)
    } else {
        format!("{v:.3}")
    }
}

fn panel(out: &mut String, p: &Panel, ox: f64) {
    let (x0, x1) = log_range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)));
    let (y0, y1) = log_range(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)));
    let w = PANEL_W - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| ox + MARGIN_L + (x.log10() - x0) / (x1 - x0) * w;
    let py = |y: f64| MARGIN_T + h - (y.log10() - y0) / (y1 - y0) * h;
    let (l, t) = (ox + MARGIN_L, MARGIN_T);
    let _ = writeln!(out, r##"<g font-family="sans-serif" font-size="11">"##);
    let _ = writeln!(out, r##"<text x="{:.1}" y="20" font-size="13" text-anchor="middle">{}</text>"##, l + w / 2.0, escape(&p.title));
    let _ = writeln!(out, r##"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##);
    for e in ticks(x0, x1) {
        let x = ox + MARGIN_L + (e - x0) / (x1 - x0) * w;
        let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, t, t + h);
        let _ = writeln!(out, r##"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##, t + h + 14.0, tick_label(e));
    }
    for e in ticks(y0, y1) {
        let y = MARGIN_T + h - (e - y0) / (y1 - y0) * h;
        let _ = writeln!(out, r##"<line x1="{l:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, l + w);
        let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##, l - 4.0, y + 4.0, tick_label(e));
    }
    let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"##, l + w / 2.0, t + h + 34.0, escape(&p.x_label));
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"##,
        ox + 14.0,
        t + h / 2.0,
        ox + 14.0,
        t + h / 2.0,
        escape(&p.y_label)
    );
    let _ = writeln!(out, r##"<clipPath id="clip{ox:.0}"><rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}"/></clipPath>"##);
    let _ = writeln!(out, r##"<g clip-path="url(#clip{ox:.0})">"##);
    for s in &p.series {
        match s.style {
            Style::Points => {
                for &(x, y) in s.points.iter().filter(|q| q.0 > 0.0 && q.1 > 0.0) {
                    let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"##, px(x), py(y), s.color);
                }
            }
            Style::Line | Style::Dashed => {
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .filter(|q| q.0 > 0.0 && q.1 > 0.0)
                    .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                    .collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="5,4""# } else { "" };
                let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.4"{dash}/>"##, pts.join(" "), s.color);
            }
        }
    }
    let _ = writeln!(out, "</g>");
    for (i, s) in p.series.iter().enumerate() {
        let y = t + 14.0 + 14.0 * i as f64;
        let _ = writeln!(out, r##"<rect x="{:.1}" y="{:.1}" width="10" height="3" fill="{}"/>"##, l + 8.0, y - 4.0, s.color);
        let _ = writeln!(out, r##"<text x="{:.1}" y="{y:.1}">{}</text>"##, l + 22.0, escape(&s.label));
    }
    let _ = writeln!(out, "</g>");
}

/// Panels side by side. `stamp` adds a generation comment, the only non-deterministic content.
pub fn render(panels: &[Panel], stamp: Option<&str>) -> String {
    let width = PANEL_W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}">"##
    );
    if let Some(s) = stamp {
        let _ = writeln!(out, "<!-- generated {} -->", escape(s));
    }
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, PANEL_W * i as f64);
    }
    out.push_str("</svg>\n");
    out
}
