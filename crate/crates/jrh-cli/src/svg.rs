//! Minimal SVG overlays: polylines and dots in a viewport fitted to the data.

use std::fmt::Write;

const WIDTH: f64 = 800.0;

pub struct Plot {
    lines: Vec<(Vec<(f64, f64)>, &'static str, bool)>,
    dots: Vec<((f64, f64), &'static str)>,
    title: String,
}

impl Plot {
    pub fn new(title: &str) -> Plot {
        Plot { lines: Vec::new(), dots: Vec::new(), title: title.to_string() }
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &'static str, closed: bool) {
        self.lines.push((pts.to_vec(), color, closed));
    }

    pub fn dot(&mut self, p: (f64, f64), color: &'static str) {
        self.dots.push((p, color));
    }

    fn extent(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let all = self.lines.iter().flat_map(|l| l.0.iter()).chain(self.dots.iter().map(|d| &d.0));
        for &(x, y) in all {
            b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
        }
        if !b.0.is_finite() {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        let pad = 0.05 * (b.1 - b.0).max(b.3 - b.2).max(1e-9);
        (b.0 - pad, b.1 + pad, b.2 - pad, b.3 + pad)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.extent();
        let k = WIDTH / (x1 - x0);
        let height = ((y1 - y0) * k).ceil();
        let tx = |x: f64| (x - x0) * k;
        let ty = |y: f64| (y1 - y) * k;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
        );
        let _ = writeln!(s, "<title>{}</title>", self.title);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="0" y1="{:.2}" x2="{WIDTH}" y2="{:.2}" stroke="#ccc" stroke-width="0.5"/>"##,
                ty(0.0),
                ty(0.0)
            );
        }
        for (pts, color, closed) in &self.lines {
            let tag = if *closed { "polygon" } else { "polyline" };
            let mut p = String::new();
            for &(x, y) in pts {
                let _ = write!(p, "{:.2},{:.2} ", tx(x), ty(y));
            }
            let _ = writeln!(s, r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, p.trim_end());
        }
        for ((x, y), color) in &self.dots {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, tx(*x), ty(*y));
        }
        s.push_str("</svg>\n");
        s
    }
}
