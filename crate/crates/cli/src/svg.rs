use std::fmt::Write;

/// Minimal SVG 1.1 emitter: fixed-precision coordinates so identical data
/// always produces identical bytes.
pub struct SvgDoc {
    width: f64,
    height: f64,
    body: String,
}

fn fmt_coord(v: f64) -> String {
    // normalize negative zero so byte output is stable
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.3}")
}

impl SvgDoc {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height, body: String::new() }
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{},{}", fmt_coord(*x), fmt_coord(*y))).collect();
        let _ = write!(
            self.body,
            "  <polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{}\" points=\"{}\"/>\n",
            fmt_coord(width),
            pts.join(" ")
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, stroke: &str, fill: &str) {
        let _ = write!(
            self.body,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" stroke=\"{stroke}\" fill=\"{fill}\"/>\n",
            fmt_coord(cx),
            fmt_coord(cy),
            fmt_coord(r)
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = write!(
            self.body,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"/>\n",
            fmt_coord(x1),
            fmt_coord(y1),
            fmt_coord(x2),
            fmt_coord(y2)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, s: &str) {
        let _ = write!(
            self.body,
            "  <text x=\"{}\" y=\"{}\" font-size=\"{}\" font-family=\"monospace\">{s}</text>\n",
            fmt_coord(x),
            fmt_coord(y),
            fmt_coord(size)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n{}</svg>\n",
            fmt_coord(self.width),
            fmt_coord(self.height),
            fmt_coord(self.width),
            fmt_coord(self.height),
            self.body
        )
    }
}

/// Affine map from a data window onto a pixel window with the y axis flipped.
pub struct Viewport {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub px: f64,
    pub py: f64,
    pub margin: f64,
}

impl Viewport {
    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let sx = (self.px - 2.0 * self.margin) / (self.x1 - self.x0);
        let sy = (self.py - 2.0 * self.margin) / (self.y1 - self.y0);
        (self.margin + (x - self.x0) * sx, self.py - self.margin - (y - self.y0) * sy)
    }

    pub fn scale(&self) -> f64 {
        (self.px - 2.0 * self.margin) / (self.x1 - self.x0)
    }
}
