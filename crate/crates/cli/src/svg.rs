//! Minimal SVG chart writer for line and grouped bar charts.

use std::fmt::Write;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Index into the palette; series sharing a colour belong to one variant.
    pub colour: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// One entry per variant, one value per category.
    pub groups: Vec<(String, Vec<f64>)>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.abs() >= 1e4 || v.abs() < 1e-3 {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Round tick positions covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON * hi.abs().max(1.0));
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).floor() as i64;
    let end = (hi / step).ceil() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let y = if self.log_y { y.log10() } else { y };
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    );
    let cy = (TOP + HEIGHT - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="18" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{}</text>"#,
        escape(y_label)
    );
}

fn axes(out: &mut String, frame: &Frame, x_ticks: &[(f64, String)], y_ticks: &[(f64, String)]) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    for (v, text) in y_ticks {
        let y = HEIGHT - BOTTOM - (v - frame.y0) / (frame.y1 - frame.y0) * (b - t);
        let _ = writeln!(out, r##"<line x1="{l}" x2="{r}" y1="{y:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            l - 6.0,
            y,
            escape(text)
        );
    }
    for (v, text) in x_ticks {
        let x = frame.px(*v);
        let _ = writeln!(out, r##"<line x1="{x:.2}" x2="{x:.2}" y1="{b}" y2="{:.1}" stroke="#333"/>"##, b + 5.0);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            b + 18.0,
            escape(text)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
        r - l,
        b - t
    );
}

fn legend(out: &mut String, entries: &[(String, usize, bool)]) {
    let x = WIDTH - RIGHT + 14.0;
    for (k, (label, colour, dashed)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="{}" stroke-width="2"{dash}/>"#,
            x + 24.0,
            PALETTE[colour % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" dominant-baseline="middle">{}</text>"#,
            x + 30.0,
            escape(label)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

pub fn line_chart(chart: &LineChart) -> String {
    let points = || chart.series.iter().flat_map(|s| s.points.iter().copied());
    let log_y = chart.log_y && points().all(|(_, y)| y > 0.0);
    let (x0, x1) = bounds(points().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
    let y_of = |y: f64| if log_y { y.log10() } else { y };
    let (ylo, yhi) = bounds(points().map(|p| y_of(p.1))).unwrap_or((0.0, 1.0));
    let (y0, y1, y_ticks) = if log_y {
        let (lo, hi) = (ylo.floor(), yhi.ceil().max(ylo.floor() + 1.0));
        let ticks = (lo as i32..=hi as i32)
            .map(|e| (e as f64, tick_label(10f64.powi(e))))
            .collect::<Vec<_>>();
        (lo, hi, ticks)
    } else {
        let (lo, hi) = if yhi > ylo { (ylo, yhi) } else { (ylo - 0.5, ylo + 0.5) };
        let ticks = nice_ticks(lo, hi, 6);
        let (a, b) = (ticks[0], *ticks.last().unwrap_or(&hi));
        (a, b, ticks.into_iter().map(|v| (v, tick_label(v))).collect())
    };
    let frame = Frame { x0, x1, y0, y1, log_y };
    let x_ticks = nice_ticks(x0, x1, 8)
        .into_iter()
        .filter(|v| *v >= x0 - 1e-9 && *v <= x1 + 1e-9)
        .map(|v| (v, tick_label(v)))
        .collect::<Vec<_>>();

    let mut out = String::new();
    header(&mut out, &chart.title, &chart.x_label, &chart.y_label);
    axes(&mut out, &frame, &x_ticks, &y_ticks);
    for s in &chart.series {
        let coords = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect::<Vec<_>>()
            .join(" ");
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.6"{dash} points="{coords}"/>"#,
            PALETTE[s.colour % PALETTE.len()]
        );
    }
    let entries = chart
        .series
        .iter()
        .map(|s| (s.label.clone(), s.colour, s.dashed))
        .collect::<Vec<_>>();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

pub fn bar_chart(chart: &BarChart) -> String {
    let categories = chart.groups.iter().map(|g| g.1.len()).max().unwrap_or(0).max(1);
    let (_, hi) = bounds(chart.groups.iter().flat_map(|g| g.1.iter().copied())).unwrap_or((0.0, 1.0));
    let ticks = nice_ticks(0.0, hi.max(f64::MIN_POSITIVE), 6);
    let y1 = *ticks.last().unwrap_or(&1.0);
    let frame = Frame {
        x0: 0.0,
        x1: categories as f64,
        y0: 0.0,
        y1: if y1 > 0.0 { y1 } else { 1.0 },
        log_y: false,
    };
    let step = (categories / 10).max(1);
    let x_ticks = (0..categories)
        .step_by(step)
        .map(|c| (c as f64 + 0.5, (c + 1).to_string()))
        .collect::<Vec<_>>();

    let mut out = String::new();
    header(&mut out, &chart.title, &chart.x_label, &chart.y_label);
    axes(&mut out, &frame, &x_ticks, &ticks.iter().map(|v| (*v, tick_label(*v))).collect::<Vec<_>>());
    let groups = chart.groups.len().max(1) as f64;
    let slot = (frame.px(1.0) - frame.px(0.0)) * 0.8 / groups;
    for (g, (_, values)) in chart.groups.iter().enumerate() {
        for (c, v) in values.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let x = frame.px(c as f64 + 0.1) + slot * g as f64;
            let top = frame.py(*v);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{slot:.2}" height="{:.2}" fill="{}"/>"#,
                (frame.py(0.0) - top).max(0.0),
                PALETTE[g % PALETTE.len()]
            );
        }
    }
    let entries = chart
        .groups
        .iter()
        .enumerate()
        .map(|(g, (label, _))| (label.clone(), g, false))
        .collect::<Vec<_>>();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}
