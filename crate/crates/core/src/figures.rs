//! SVG figures for a run report.
//!
//! Output is plain text built with fixed-precision numbers, so identical
//! reports produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::matrix::SymmetricMatrix;
use crate::mds::Coordinates;
use crate::pipeline::{write_all, RunReport};
use crate::Result;

pub const EMBEDDING_COLOR: &str = "#2166ac";
pub const REFERENCE_COLOR: &str = "#b2182b";

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut s = Svg { body: String::new(), width, height };
        s.rect(0.0, 0.0, width, height, "#ffffff");
        s
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        )
        .unwrap();
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        )
        .unwrap();
    }

    fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str) {
        writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"/>"#).unwrap();
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, fill: &str, s: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size:.1}" text-anchor="{anchor}" fill="{fill}">{}</text>"#,
            escape(s)
        )
        .unwrap();
    }

    fn rotated_text(&mut self, x: f64, y: f64, size: f64, s: &str) {
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size:.1}" text-anchor="end" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(s)
        )
        .unwrap();
    }

    fn finish(self) -> Vec<u8> {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
        .into_bytes()
    }
}

/// Diverging scale: blue for -1, white for 0, red for +1.
pub fn diverging_color(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (end, t) = if v < 0.0 { ((33, 102, 172), -v) } else { ((178, 24, 43), v) };
    let mix = |c: u8| (255.0 + (f64::from(c) - 255.0) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

fn heatmap_panel(svg: &mut Svg, m: &SymmetricMatrix, x0: f64, y0: f64, size: f64, title: &str) {
    let n = m.n();
    let cell = size / n as f64;
    let font = (cell * 0.8).clamp(3.0, 11.0);
    svg.text(x0 + size / 2.0, y0 - 70.0, 14.0, "middle", "#000000", title);
    for i in 0..n {
        for j in 0..n {
            svg.rect(x0 + j as f64 * cell, y0 + i as f64 * cell, cell, cell, &diverging_color(m.get(i, j)));
        }
        let label = &m.labels()[i];
        svg.text(x0 - 3.0, y0 + (i as f64 + 0.75) * cell, font, "end", "#000000", label);
        svg.rotated_text(x0 + (i as f64 + 0.75) * cell, y0 - 3.0, font, label);
    }
}

fn heatmaps(report: &RunReport) -> Vec<u8> {
    let size = 420.0;
    let margin = 90.0;
    let mut svg = Svg::new(2.0 * (size + margin) + 80.0, size + margin + 60.0);
    heatmap_panel(&mut svg, &report.item_similarity, margin, margin, size, "Item similarity");
    heatmap_panel(&mut svg, &report.dimension_similarity, 2.0 * margin + size, margin, size, "Dimension similarity");
    // Color bar.
    let bx = 2.0 * (size + margin) + 20.0;
    for k in 0..100 {
        let v = 1.0 - 2.0 * k as f64 / 99.0;
        svg.rect(bx, margin + k as f64 * size / 100.0, 16.0, size / 100.0 + 0.5, &diverging_color(v));
    }
    svg.text(bx + 20.0, margin + 8.0, 10.0, "start", "#000000", "1");
    svg.text(bx + 20.0, margin + size / 2.0 + 4.0, 10.0, "start", "#000000", "0");
    svg.text(bx + 20.0, margin + size, 10.0, "start", "#000000", "-1");
    svg.finish()
}

/// Maps data ranges onto a square plotting area with a shared scale.
struct Frame {
    x0: f64,
    y0: f64,
    size: f64,
    min: (f64, f64),
    span: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, x0: f64, y0: f64, size: f64) -> Self {
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for (x, y) in points {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            lo = (0.0, 0.0);
            hi = (1.0, 1.0);
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-12) * 1.1;
        let mid = ((lo.0 + hi.0) / 2.0, (lo.1 + hi.1) / 2.0);
        Frame { x0, y0, size, min: (mid.0 - span / 2.0, mid.1 - span / 2.0), span }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.x0 + (x - self.min.0) / self.span * self.size,
            self.y0 + self.size - (y - self.min.1) / self.span * self.size,
        )
    }

    fn axes(&self, svg: &mut Svg, xlabel: &str, ylabel: &str) {
        let (x0, y0, s) = (self.x0, self.y0, self.size);
        svg.line(x0, y0 + s, x0 + s, y0 + s, "#000000", 1.0);
        svg.line(x0, y0, x0, y0 + s, "#000000", 1.0);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.min.0 + f * self.span;
            let yv = self.min.1 + f * self.span;
            svg.text(x0 + f * s, y0 + s + 14.0, 9.0, "middle", "#000000", &format!("{xv:.2}"));
            svg.text(x0 - 4.0, y0 + s - f * s + 3.0, 9.0, "end", "#000000", &format!("{yv:.2}"));
        }
        svg.text(x0 + s / 2.0, y0 + s + 32.0, 12.0, "middle", "#000000", xlabel);
        svg.rotated_text(x0 - 40.0, y0 + s / 2.0, 12.0, ylabel);
    }
}

fn scatter(report: &RunReport) -> Option<Vec<u8>> {
    let reg = report.regression.as_ref()?;
    let mut svg = Svg::new(560.0, 560.0);
    let frame = Frame::fit(report.pair_similarities.iter().map(|p| (p.embedding, p.reference)), 80.0, 50.0, 420.0);
    frame.axes(&mut svg, "Embedding similarity (r)", "Human similarity (r)");
    for p in &report.pair_similarities {
        let (x, y) = frame.px(p.embedding, p.reference);
        svg.circle(x, y, 2.5, EMBEDDING_COLOR);
    }
    let xs = report.pair_similarities.iter().map(|p| p.embedding);
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (ax, ay) = frame.px(lo, reg.intercept + reg.slope * lo);
    let (bx, by) = frame.px(hi, reg.intercept + reg.slope * hi);
    svg.line(ax, ay, bx, by, REFERENCE_COLOR, 1.5);
    svg.text(90.0, 40.0, 13.0, "start", "#000000", &scatter_annotation(reg.r, reg.r2));
    Some(svg.finish())
}

pub fn scatter_annotation(r: f64, r2: f64) -> String {
    format!("r = {r:.2}, R² = {r2:.2}")
}

fn configuration(labels: &[String], coords: &Coordinates, title: &str) -> Vec<u8> {
    let mut svg = Svg::new(560.0, 560.0);
    let frame = Frame::fit(coords.iter().map(|c| (c[0], c[1])), 80.0, 50.0, 420.0);
    frame.axes(&mut svg, "Dimension 1", "Dimension 2");
    svg.text(280.0, 30.0, 14.0, "middle", "#000000", title);
    for (l, c) in labels.iter().zip(coords) {
        let (x, y) = frame.px(c[0], c[1]);
        svg.circle(x, y, 3.0, EMBEDDING_COLOR);
        svg.text(x + 5.0, y - 5.0, 10.0, "start", EMBEDDING_COLOR, l);
    }
    svg.finish()
}

fn comparison(labels: &[String], reference: &Coordinates, embeddings: &Coordinates) -> Vec<u8> {
    let mut svg = Svg::new(560.0, 580.0);
    let all = reference.iter().chain(embeddings).map(|c| (c[0], c[1]));
    let frame = Frame::fit(all, 80.0, 50.0, 420.0);
    frame.axes(&mut svg, "Dimension 1", "Dimension 2");
    for ((l, h), e) in labels.iter().zip(reference).zip(embeddings) {
        let (hx, hy) = frame.px(h[0], h[1]);
        let (ex, ey) = frame.px(e[0], e[1]);
        svg.line(hx, hy, ex, ey, "#888888", 1.0);
        svg.circle(hx, hy, 3.0, REFERENCE_COLOR);
        svg.circle(ex, ey, 3.0, EMBEDDING_COLOR);
        svg.text(hx + 4.0, hy - 4.0, 9.0, "start", REFERENCE_COLOR, &format!("{l}-H"));
        svg.text(ex + 4.0, ey - 4.0, 9.0, "start", EMBEDDING_COLOR, &format!("{l}-E"));
    }
    svg.text(90.0, 555.0, 11.0, "start", REFERENCE_COLOR, "human");
    svg.text(150.0, 555.0, 11.0, "start", EMBEDDING_COLOR, "embeddings (after Procrustes)");
    svg.finish()
}

/// Writes the figures a report supports: similarity heatmaps and the
/// embedding MDS configuration always; the pair scatter and the paired
/// configuration plot when reference data was part of the run.
pub fn emit_figures(report: &RunReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(&str, Vec<u8>)> = vec![
        ("similarity_heatmaps.svg", heatmaps(report)),
        (
            "mds_configuration.svg",
            configuration(&report.mds_embeddings.labels, &report.mds_embeddings.coordinates, "MDS configuration (embeddings)"),
        ),
    ];
    if let Some(s) = scatter(report) {
        files.push(("pair_scatter.svg", s));
    }
    if let (Some(human), Some(al)) = (&report.mds_reference, &report.alignment) {
        files.push(("mds_comparison.svg", comparison(&human.labels, &human.coordinates, &al.transformed)));
    }
    write_all(out_dir, &files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diverging_scale_is_centered_at_white() {
        assert_eq!(diverging_color(0.0), "#ffffff");
        assert_eq!(diverging_color(1.0), "#b2182b");
        assert_eq!(diverging_color(-1.0), "#2166ac");
        assert_eq!(diverging_color(-7.0), "#2166ac");
    }

    #[test]
    fn annotation_rounds_r_squared() {
        assert_eq!(scatter_annotation(0.74, 0.74 * 0.74), "r = 0.74, R² = 0.55");
    }

    #[test]
    fn labels_are_escaped() {
        assert_eq!(escape("a<b&\"c\""), "a&lt;b&amp;&quot;c&quot;");
    }
}
