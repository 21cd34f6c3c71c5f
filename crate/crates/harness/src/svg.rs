//! Minimal line charts: axes, ticks, a legend, one polyline per series and
//! an optional ±sd band. The output depends only on the data, so charts are
//! byte-identical across runs.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const MAX_POINTS: usize = 400;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// `(x, y, sd)`; `sd` is drawn as a band when present.
    pub points: Vec<(f64, f64, Option<f64>)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Evenly spaced indices into `0..len`, always keeping the last one.
fn keep(len: usize) -> Vec<usize> {
    if len <= MAX_POINTS {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_POINTS).map(|i| i * (len - 1) / (MAX_POINTS - 1)).collect();
    idx.dedup();
    idx
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick label with at most four significant decimals and no trailing zeros.
fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn range<I: Iterator<Item = f64>>(values: I) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let step = nice_step((hi - lo) / 4.0);
    ((lo / step).floor() * step, (hi / step).ceil() * step)
}

/// The smallest of 1, 2, 2.5 and 5 times a power of ten that is at least `raw`.
fn nice_step(raw: f64) -> f64 {
    let p = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * p)
        .find(|&s| s >= raw * (1.0 - 1e-9))
        .unwrap_or(10.0 * p)
}

impl Chart {
    pub fn render(&self) -> String {
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = range(pts().map(|p| p.0));
        let (y0, y1) = range(pts().flat_map(|p| {
            let sd = p.2.unwrap_or(0.0);
            [p.1 - sd, p.1 + sd]
        }));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{LEFT:.2},{TOP:.2}V{:.2}H{:.2}" fill="none" stroke="black"/>"#,
            TOP + ph,
            LEFT + pw
        );
        let ticks = |a: f64, b: f64| ((b - a) / nice_step((b - a) / 4.0)).round().clamp(1.0, 10.0) as usize;
        let nx = ticks(x0, x1);
        for i in 0..=nx {
            let v = x0 + i as f64 / nx as f64 * (x1 - x0);
            let px = sx(v);
            let _ = writeln!(
                s,
                r#"<path d="M{px:.2},{:.2}v4" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph,
                TOP + ph + 16.0,
                tick(v)
            );
        }
        let ny = ticks(y0, y1);
        for i in 0..=ny {
            let v = y0 + i as f64 / ny as f64 * (y1 - y0);
            let py = sy(v);
            let _ = writeln!(
                s,
                r#"<path d="M{LEFT:.2},{py:.2}h-4" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                py + 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(14,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let idx = keep(series.points.len());
            let kept: Vec<_> = idx.iter().map(|&j| series.points[j]).collect();
            if kept.iter().any(|p| p.2.is_some_and(|sd| sd > 0.0)) {
                let mut d = String::new();
                for (j, p) in kept.iter().enumerate() {
                    let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { "L" }, sx(p.0), sy(p.1 + p.2.unwrap_or(0.0)));
                }
                for p in kept.iter().rev() {
                    let _ = write!(d, "L{:.2},{:.2}", sx(p.0), sy(p.1 - p.2.unwrap_or(0.0)));
                }
                let _ = writeln!(s, r#"<path d="{d}Z" fill="{color}" fill-opacity="0.15" stroke="none"/>"#);
            }
            let line: Vec<String> = kept
                .iter()
                .filter(|p| p.1.is_finite())
                .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                line.join(" ")
            );
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 12.0;
            let _ = writeln!(
                s,
                r#"<path d="M{lx:.2},{ly:.2}h20" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 26.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
