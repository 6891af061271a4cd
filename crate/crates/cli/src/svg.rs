//! Minimal planar figures: polygons and point sets drawn in data
//! coordinates and fitted to a square canvas.

use std::fmt::Write as _;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone)]
enum Layer {
    Polygon { vertices: Vec<[f64; 2]>, stroke: &'static str, fill: &'static str, label: String },
    Points { points: Vec<[f64; 2]>, color: &'static str, radius: f64 },
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    layers: Vec<Layer>,
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

impl Figure {
    pub fn polygon(&mut self, vertices: Vec<[f64; 2]>, label: impl Into<String>) {
        let k = self.layers.iter().filter(|l| matches!(l, Layer::Polygon { .. })).count();
        let stroke = PALETTE[k % PALETTE.len()];
        self.layers.push(Layer::Polygon { vertices, stroke, fill: "none", label: label.into() });
    }

    pub fn shaded_polygon(&mut self, vertices: Vec<[f64; 2]>, label: impl Into<String>) {
        self.layers.push(Layer::Polygon { vertices, stroke: "#555555", fill: "#e8e8e8", label: label.into() });
    }

    pub fn points(&mut self, points: Vec<[f64; 2]>, highlight: bool) {
        let (color, radius) = if highlight { ("#d62728", 4.0) } else { ("#333333", 1.5) };
        self.layers.push(Layer::Points { points, color, radius });
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for layer in &self.layers {
            let pts = match layer {
                Layer::Polygon { vertices, .. } => vertices,
                Layer::Points { points, .. } => points,
            };
            for p in pts.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        lo[0].is_finite().then_some((lo, hi))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#);
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        if let Some((lo, hi)) = self.bounds() {
            let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
            let s = (CANVAS - 2.0 * MARGIN) / span;
            let map = |p: &[f64; 2]| (MARGIN + (p[0] - lo[0]) * s, CANVAS - MARGIN - (p[1] - lo[1]) * s);
            for layer in &self.layers {
                match layer {
                    Layer::Polygon { vertices, stroke, fill, label } => {
                        let pts: Vec<String> = vertices.iter().map(|p| {
                            let (x, y) = map(p);
                            format!("{x:.2},{y:.2}")
                        }).collect();
                        let _ = writeln!(
                            out,
                            r#"<polygon points="{}" fill="{fill}" stroke="{stroke}" stroke-width="1.5"><title>{label}</title></polygon>"#,
                            pts.join(" ")
                        );
                    }
                    Layer::Points { points, color, radius } => {
                        for p in points {
                            let (x, y) = map(p);
                            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{color}"/>"#);
                        }
                    }
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_layers_inside_the_canvas() {
        let mut f = Figure::default();
        f.polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "triangle");
        f.points(vec![[0.2, 0.2]], true);
        let svg = f.render();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("20.00,620.00"));
    }
}
