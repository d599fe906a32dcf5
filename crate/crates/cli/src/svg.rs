//! Minimal SVG plots. Polygon and point coordinates are written in data
//! units; a single group transform maps them into a fixed 480x480 canvas.

use std::fmt::Write;

use nalgebra::DVector;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Layer {
    pub label: String,
    pub polygon: Vec<DVector<f64>>,
    pub dashed: bool,
}

#[derive(Default)]
pub struct Plot {
    pub title: String,
    pub layers: Vec<Layer>,
    pub points: Vec<DVector<f64>>,
    pub marker: Option<DVector<f64>>,
}

impl Plot {
    pub fn new(title: impl Into<String>) -> Plot {
        Plot { title: title.into(), ..Plot::default() }
    }

    pub fn polygon(&mut self, label: impl Into<String>, polygon: Vec<DVector<f64>>) {
        self.layers.push(Layer { label: label.into(), polygon, dashed: false });
    }

    pub fn dashed(&mut self, label: impl Into<String>, polygon: Vec<DVector<f64>>) {
        self.layers.push(Layer { label: label.into(), polygon, dashed: true });
    }

    fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let all = self.layers.iter().flat_map(|l| l.polygon.iter()).chain(&self.points).chain(&self.marker);
        for p in all {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if lo[0] > hi[0] {
            return ([-1.0, -1.0], [1.0, 1.0]);
        }
        for d in 0..2 {
            if hi[d] - lo[d] < 1e-12 {
                lo[d] -= 0.5;
                hi[d] += 0.5;
            }
        }
        (lo, hi)
    }

    pub fn render(&self) -> String {
        let (lo, hi) = self.bounds();
        let scale = (SIZE - 2.0 * MARGIN) / (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let tx = MARGIN - scale * lo[0];
        let ty = SIZE - MARGIN + scale * lo[1];
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SIZE} {SIZE}" width="{SIZE}" height="{SIZE}">"#);
        let _ = writeln!(s, "<title>{}</title>", escape(&self.title));
        let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        let _ = writeln!(s, r#"<g transform="matrix({scale} 0 0 {} {tx} {ty})">"#, -scale);
        for (i, layer) in self.layers.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if layer.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<polygon class="set" data-label="{}" points="{}" fill="{color}" fill-opacity="0.15" stroke="{color}" stroke-width="1.5"{dash} vector-effect="non-scaling-stroke"/>"#,
                escape(&layer.label),
                points(&layer.polygon)
            );
        }
        let r = 1.5 / scale;
        for p in &self.points {
            let _ = writeln!(s, r##"<circle class="sample" cx="{}" cy="{}" r="{r}" fill="#444444"/>"##, p[0], p[1]);
        }
        if let Some(p) = &self.marker {
            let _ = writeln!(s, r##"<circle class="marker" cx="{}" cy="{}" r="{}" fill="black"/>"##, p[0], p[1], 3.0 * r);
        }
        s.push_str("</g>\n");
        for (i, layer) in self.layers.iter().enumerate() {
            let y = 16.0 + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="8" y="{y}" font-family="monospace" font-size="11" fill="{}">{}</text>"#,
                PALETTE[i % PALETTE.len()],
                escape(&layer.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn points(poly: &[DVector<f64>]) -> String {
    poly.iter().map(|p| format!("{},{}", p[0], p[1])).collect::<Vec<_>>().join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Polygons as `(label, vertices)`, read back from a rendered plot.
pub fn parse_polygons(svg: &str) -> Vec<(String, Vec<[f64; 2]>)> {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let start = tag.find(&format!(" {name}=\""))? + name.len() + 3;
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].to_string())
    };
    svg.lines()
        .filter(|l| l.starts_with("<polygon"))
        .filter_map(|l| {
            let label = attr(l, "data-label")?;
            let pts = attr(l, "points")?
                .split_whitespace()
                .filter_map(|p| {
                    let (x, y) = p.split_once(',')?;
                    Some([x.parse().ok()?, y.parse().ok()?])
                })
                .collect();
            Some((label, pts))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygons_survive_a_round_trip() {
        let tri = vec![
            DVector::from_row_slice(&[0.1, -2.0]),
            DVector::from_row_slice(&[1.0 / 3.0, 4.0]),
            DVector::from_row_slice(&[-7.25, 0.0]),
        ];
        let mut plot = Plot::new("t");
        plot.polygon("a & b", tri.clone());
        let parsed = parse_polygons(&plot.render());
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].0, "a &amp; b");
        for (p, q) in parsed[0].1.iter().zip(&tri) {
            assert_eq!(p[0], q[0]);
            assert_eq!(p[1], q[1]);
        }
    }
}
