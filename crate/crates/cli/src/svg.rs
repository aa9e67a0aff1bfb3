//! Minimal SVG plotting: polygons, polylines, markers, axis ticks and a legend.

use std::fmt::Write;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

enum Item {
    Polygon { points: Vec<[f64; 2]>, color: String, opacity: f64 },
    Polyline { points: Vec<[f64; 2]>, color: String, width: f64, dashed: bool, markers: bool },
    Marker { at: [f64; 2], color: String },
}

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    lo: [f64; 2],
    hi: [f64; 2],
    items: Vec<Item>,
    legend: Vec<(String, String)>,
}

impl Plot {
    pub fn new(title: &str, lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self {
            title: title.into(),
            x_label: "x1".into(),
            y_label: "x2".into(),
            lo,
            hi,
            items: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn polygon(&mut self, points: Vec<[f64; 2]>, color: &str, opacity: f64) {
        if points.len() >= 3 {
            self.items.push(Item::Polygon { points, color: color.into(), opacity });
        }
    }

    pub fn polyline(&mut self, points: Vec<[f64; 2]>, color: &str, width: f64, dashed: bool) {
        if points.len() >= 2 {
            self.items.push(Item::Polyline { points, color: color.into(), width, dashed, markers: false });
        }
    }

    pub fn trajectory(&mut self, points: Vec<[f64; 2]>, color: &str) {
        if let Some(first) = points.first().copied() {
            self.items.push(Item::Polyline { points, color: color.into(), width: 1.2, dashed: false, markers: true });
            self.items.push(Item::Marker { at: first, color: color.into() });
        }
    }

    pub fn legend(&mut self, label: &str, color: &str) {
        self.legend.push((label.into(), color.into()));
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = LEFT + (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]) * pw;
        let sy = TOP + (self.hi[1] - p[1]) / (self.hi[1] - self.lo[1]) * ph;
        (sx, sy)
    }

    fn path(&self, points: &[[f64; 2]]) -> String {
        points
            .iter()
            .map(|p| {
                let (x, y) = self.map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        self.axes(&mut s);
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for item in &self.items {
            match item {
                Item::Polygon { points, color, opacity } => {
                    let _ = writeln!(
                        s,
                        r#"<polygon points="{}" fill="{color}" fill-opacity="{opacity}" stroke="{color}" stroke-width="1"/>"#,
                        self.path(points)
                    );
                }
                Item::Polyline { points, color, width, dashed, markers } => {
                    let dash = if *dashed { r#" stroke-dasharray="5,3""# } else { "" };
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
                        self.path(points)
                    );
                    if *markers {
                        for p in points {
                            let (x, y) = self.map(*p);
                            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.8" fill="{color}"/>"#);
                        }
                    }
                }
                Item::Marker { at, color } => {
                    let (x, y) = self.map(*at);
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="{color}" stroke="black" stroke-width="0.5"/>"#,
                        x - 3.5,
                        y - 3.5
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
        for (i, (label, color)) in self.legend.iter().enumerate() {
            let y = TOP + 10.0 + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            let _ = writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="10" fill="{color}"/>"#, y - 8.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }

    fn axes(&self, s: &mut String) {
        let (x0, y0) = self.map(self.lo);
        let (x1, y1) = self.map(self.hi);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(self.lo[0], self.hi[0]) {
            let (x, _) = self.map([t, self.lo[1]]);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"##, y0 + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 17.0, tick_label(t));
        }
        for t in ticks(self.lo[1], self.hi[1]) {
            let (_, y) = self.map([self.lo[0], t]);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 4.0, tick_label(t));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            y0 + 36.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            x0 - 40.0,
            (y0 + y1) / 2.0,
            x0 - 40.0,
            (y0 + y1) / 2.0,
            escape(&self.y_label)
        );
    }
}

/// Round tick positions covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_inside() {
        assert_eq!(ticks(-10.5, 10.5), vec![-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
    }

    #[test]
    fn render_is_well_formed() {
        let mut p = Plot::new("a < b", [0.0, 0.0], [1.0, 1.0]);
        p.polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], PALETTE[0], 0.3);
        p.trajectory(vec![[0.1, 0.1], [0.5, 0.5]], PALETTE[1]);
        p.legend("set", PALETTE[0]);
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<polygon").count(), 1);
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
