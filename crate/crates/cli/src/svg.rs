//! Static SVG plots written by hand.

use std::fmt::Write;

use dirquant_core::ConvexRegion2D;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 0.1;

enum Item {
    Points { pts: Vec<[f64; 2]>, r: f64, fill: String },
    Line { b: [f64; 2], a: f64, stroke: String },
    Polygon { pts: Vec<[f64; 2]>, stroke: String, fill: String },
    Polyline { pts: Vec<[f64; 2]>, stroke: String },
}

/// A plot in data coordinates. The view box is the extent of points and
/// polygons plus a 10% margin; lines are clipped to it.
#[derive(Default)]
pub struct Plot {
    title: String,
    items: Vec<Item>,
}

impl Plot {
    pub fn new(title: &str) -> Self {
        Plot { title: title.to_owned(), items: Vec::new() }
    }

    pub fn points(&mut self, pts: Vec<[f64; 2]>, r: f64, fill: &str) -> &mut Self {
        self.items.push(Item::Points { pts, r, fill: fill.to_owned() });
        self
    }

    /// The line `b'z = a`.
    pub fn line(&mut self, b: [f64; 2], a: f64, stroke: &str) -> &mut Self {
        self.items.push(Item::Line { b, a, stroke: stroke.to_owned() });
        self
    }

    pub fn region(&mut self, r: &ConvexRegion2D, stroke: &str, fill: &str) -> &mut Self {
        if r.is_bounded() && !r.vertices().is_empty() {
            self.items.push(Item::Polygon {
                pts: r.vertices().to_vec(),
                stroke: stroke.to_owned(),
                fill: fill.to_owned(),
            });
        }
        self
    }

    pub fn polyline(&mut self, pts: Vec<[f64; 2]>, stroke: &str) -> &mut Self {
        self.items.push(Item::Polyline { pts, stroke: stroke.to_owned() });
        self
    }

    fn extent(&self) -> [f64; 4] {
        let mut e = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for item in &self.items {
            let pts = match item {
                Item::Points { pts, .. } | Item::Polygon { pts, .. } | Item::Polyline { pts, .. } => pts,
                Item::Line { .. } => continue,
            };
            for p in pts {
                e = [e[0].min(p[0]), e[1].min(p[1]), e[2].max(p[0]), e[3].max(p[1])];
            }
        }
        if !e[0].is_finite() {
            e = [-1.0, -1.0, 1.0, 1.0];
        }
        let (w, h) = ((e[2] - e[0]).max(1e-9), (e[3] - e[1]).max(1e-9));
        [e[0] - MARGIN * w, e[1] - MARGIN * h, e[2] + MARGIN * w, e[3] + MARGIN * h]
    }

    pub fn render(&self) -> String {
        let e = self.extent();
        let (sx, sy) = (SIZE / (e[2] - e[0]), SIZE / (e[3] - e[1]));
        let px = |p: [f64; 2]| ((p[0] - e[0]) * sx, SIZE - (p[1] - e[1]) * sy);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, "<!-- dirquant {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="10" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
            escape(&self.title)
        );
        for item in &self.items {
            match item {
                Item::Points { pts, r, fill } => {
                    for &p in pts {
                        let (x, y) = px(p);
                        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r}" fill="{fill}"/>"#);
                    }
                }
                Item::Line { b, a, stroke } => {
                    if let Some((p, q)) = clip_line(*b, *a, e) {
                        let ((x1, y1), (x2, y2)) = (px(p), px(q));
                        let _ = writeln!(
                            s,
                            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{stroke}" stroke-width="1"/>"#
                        );
                    }
                }
                Item::Polygon { pts, stroke, fill } => {
                    let _ = writeln!(
                        s,
                        r#"<polygon points="{}" stroke="{stroke}" fill="{fill}" fill-opacity="0.3" stroke-width="2"/>"#,
                        path(pts, &px)
                    );
                }
                Item::Polyline { pts, stroke } => {
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" stroke="{stroke}" fill="none" stroke-width="2"/>"#,
                        path(pts, &px)
                    );
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn path(pts: &[[f64; 2]], px: &impl Fn([f64; 2]) -> (f64, f64)) -> String {
    pts.iter()
        .map(|&p| {
            let (x, y) = px(p);
            format!("{x:.3},{y:.3}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Liang-Barsky clip of `b'z = a` against the box `[x0, y0, x1, y1]`.
fn clip_line(b: [f64; 2], a: f64, e: [f64; 4]) -> Option<([f64; 2], [f64; 2])> {
    let nn = b[0] * b[0] + b[1] * b[1];
    if nn == 0.0 {
        return None;
    }
    let o = [a * b[0] / nn, a * b[1] / nn];
    let d = [-b[1], b[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (axis, (min, max)) in [(e[0], e[2]), (e[1], e[3])].into_iter().enumerate() {
        if d[axis].abs() < 1e-15 {
            if o[axis] < min || o[axis] > max {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((min - o[axis]) / d[axis], (max - o[axis]) / d[axis]);
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    }
    (lo < hi).then(|| ([o[0] + lo * d[0], o[1] + lo * d[1]], [o[0] + hi * d[0], o[1] + hi * d[1]]))
}
