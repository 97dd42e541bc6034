//! Minimal SVG charts: lines, steps, markers and histogram bars.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Style {
    Line,
    Step,
    Markers,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Horizontal reference lines (y, label).
    pub levels: Vec<(f64, String)>,
    /// Histogram bars (lo, hi, height), drawn beneath the series.
    pub bars: Vec<(f64, f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
            levels: Vec::new(),
            bars: Vec::new(),
            y_range: None,
        }
    }

    pub fn series(mut self, label: &str, points: Vec<(f64, f64)>, style: Style) -> Self {
        self.series.push(Series {
            label: label.into(),
            points,
            style,
        });
        self
    }

    fn ty(&self, y: f64) -> Option<f64> {
        if self.log_y {
            (y > 0.0).then(|| y.log10())
        } else {
            y.is_finite().then_some(y)
        }
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (true, Some(y)) = (x.is_finite(), self.ty(y)) {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        for &(lo, hi, h) in &self.bars {
            xs.extend([lo, hi]);
            ys.extend(self.ty(h));
            if !self.log_y {
                ys.push(0.0);
            }
        }
        let x = span(&xs);
        let y = match self.y_range {
            Some((lo, hi)) => (self.ty(lo).unwrap_or(lo), self.ty(hi).unwrap_or(hi)),
            None => {
                ys.extend(self.levels.iter().filter_map(|(y, _)| self.ty(*y)));
                span(&ys)
            }
        };
        (x, y)
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y.clamp(y0, y1) - y0) / (y1 - y0) * ph;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        for &(lo, hi, h) in &self.bars {
            let Some(top) = self.ty(h) else { continue };
            let base = if self.log_y { y0 } else { 0.0 };
            let _ = writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
                sx(lo),
                sy(top),
                (sx(hi) - sx(lo)).max(0.0),
                (sy(base) - sy(top)).max(0.0)
            );
        }
        // Axes and ticks.
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for t in ticks(x0, x1) {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#,
                sx(t),
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0,
                label(t)
            );
        }
        for t in ticks(y0, y1) {
            let text = if self.log_y {
                format!("1e{}", t.round())
            } else {
                label(t)
            };
            if self.log_y && (t - t.round()).abs() > 1e-9 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#,
                LEFT - 5.0,
                sy(t),
                LEFT,
                LEFT - 8.0,
                sy(t) + 4.0,
                text
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (y, text) in &self.levels {
            let Some(ty) = self.ty(*y) else { continue };
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#555" stroke-dasharray="5,4"/><text x="{2}" y="{3:.2}" text-anchor="end" fill="#555">{4}</text>"##,
                sy(ty),
                LEFT + pw,
                LEFT + pw - 4.0,
                sy(ty) - 4.0,
                escape(text)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| self.ty(y).map(|y| (sx(x), sy(y))))
                .collect();
            match s.style {
                Style::Markers => {
                    for (x, y) in &pts {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#
                        );
                    }
                }
                Style::Line | Style::Step => {
                    let mut d = String::new();
                    for (i, (x, y)) in pts.iter().enumerate() {
                        if i == 0 {
                            let _ = write!(d, "M{x:.2},{y:.2}");
                        } else if s.style == Style::Step {
                            let _ = write!(d, " H{x:.2} V{y:.2}");
                        } else {
                            let _ = write!(d, " L{x:.2},{y:.2}");
                        }
                    }
                    let _ = writeln!(
                        out,
                        r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
                LEFT + 10.0,
                ly - 4.0,
                LEFT + 28.0,
                ly,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = 0.5 * hi.abs().max(1e-12);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Round tick positions covering [lo, hi].
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step && out.len() < 50 {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.6}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.into()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(label(0.5), "0.5");
        assert_eq!(label(2.5e-7), "2.5e-7");
    }

    #[test]
    fn renders_well_formed_document() {
        let mut c = Chart::new("J <vs> eta", "eta", "J")
            .series("J", vec![(1.0, 1e-3), (2.0, 1e-5), (3.0, 0.0)], Style::Line);
        c.log_y = true;
        c.levels.push((1e-4, "floor".into()));
        let svg = c.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;vs&gt;"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn histogram_bars() {
        let mut c = Chart::new("h", "x", "count");
        c.bars = vec![(0.0, 1.0, 3.0), (1.0, 2.0, 5.0)];
        assert_eq!(c.render().matches("#9ecae1").count(), 2);
    }
}
