//! Two-dimensional SVG rendering of a diagram over its dataset.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{dot, Dataset, PowerDiagram};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Clone, Debug, PartialEq)]
pub struct SvgOptions {
    /// Canvas width and height in pixels.
    pub size: f64,
    /// Fraction of the data extent added on every side.
    pub padding: f64,
    /// Points drawn enlarged.
    pub support_vectors: Vec<usize>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { size: 600.0, padding: 0.1, support_vectors: Vec::new() }
    }
}

struct Frame {
    min: [f64; 2],
    scale: f64,
    size: f64,
}

impl Frame {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        ((p[0] - self.min[0]) * self.scale, self.size - (p[1] - self.min[1]) * self.scale)
    }
}

/// Part of the line `aᵀx = b` inside the box and inside every half-plane
/// `gᵀx ≤ h` of `cuts`, as a segment.
fn clip_line(a: [f64; 2], b: f64, min: [f64; 2], max: [f64; 2], cuts: &[([f64; 2], f64)]) -> Option<([f64; 2], [f64; 2])> {
    let nn = a[0] * a[0] + a[1] * a[1];
    if nn == 0.0 {
        return None;
    }
    let p0 = [a[0] * b / nn, a[1] * b / nn];
    let u = [-a[1], a[0]];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut halfplanes: Vec<([f64; 2], f64)> =
        vec![([1.0, 0.0], max[0]), ([-1.0, 0.0], -min[0]), ([0.0, 1.0], max[1]), ([0.0, -1.0], -min[1])];
    halfplanes.extend_from_slice(cuts);
    for (g, h) in halfplanes {
        let slope = g[0] * u[0] + g[1] * u[1];
        let room = h - (g[0] * p0[0] + g[1] * p0[1]);
        if slope.abs() < 1e-15 {
            if room < 0.0 {
                return None;
            }
        } else if slope > 0.0 {
            hi = hi.min(room / slope);
        } else {
            lo = lo.max(room / slope);
        }
    }
    (lo < hi).then(|| ([p0[0] + lo * u[0], p0[1] + lo * u[1]], [p0[0] + hi * u[0], p0[1] + hi * u[1]]))
}

/// Points colored by cluster, sites, cell boundaries and, for `ε > 0`, a
/// translucent band of half-width `ε` around each boundary.
pub fn emit_svg(diagram: &PowerDiagram, data: &Dataset, epsilon: f64, options: &SvgOptions) -> Result<String> {
    if data.d() != 2 || diagram.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, actual: data.d().max(diagram.d()) });
    }
    if data.k() != diagram.k() {
        return Err(Error::ClusterMismatch { expected: diagram.k(), actual: data.k() });
    }
    let k = diagram.k();
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in data.points().chain(diagram.sites.as_slice().iter().map(Vec::as_slice)) {
        for a in 0..2 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let extent = (max[0] - min[0]).max(max[1] - min[1]).max(1e-9);
    for a in 0..2 {
        let mid = 0.5 * (min[a] + max[a]);
        min[a] = mid - extent * (0.5 + options.padding);
        max[a] = mid + extent * (0.5 + options.padding);
    }
    let frame = Frame { min, scale: options.size / (max[0] - min[0]), size: options.size };

    let mut segments = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (si, sj) = (diagram.sites.site(i), diagram.sites.site(j));
            let a = [sj[0] - si[0], sj[1] - si[1]];
            let b = diagram.gamma[j] - diagram.gamma[i];
            // on the i|j boundary, neither i nor j may lose to a third cell
            let cuts: Vec<([f64; 2], f64)> = (0..k)
                .filter(|&m| m != i && m != j)
                .map(|m| {
                    let sm = diagram.sites.site(m);
                    ([sm[0] - si[0], sm[1] - si[1]], diagram.gamma[m] - diagram.gamma[i])
                })
                .collect();
            if let Some(seg) = clip_line(a, b, min, max, &cuts) {
                segments.push((i, j, seg, dot(&a, &a).sqrt()));
            }
        }
    }

    let mut out = String::new();
    let size = options.size;
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:.0}" height="{h:.0}" viewBox="0 0 {size:.0} {h:.0}">"#,
        h = size + 40.0
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{size:.0}" height="{size:.0}" fill="white" stroke="black"/>"#);
    if epsilon > 0.0 {
        let width = 2.0 * epsilon * frame.scale;
        for (_, _, (p, q), _) in &segments {
            let (x1, y1) = frame.px(*p);
            let (x2, y2) = frame.px(*q);
            let _ = writeln!(
                out,
                r#"<line class="band" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="gray" stroke-opacity="0.35" stroke-width="{width:.3}"/>"#
            );
        }
    }
    for (i, j, (p, q), _) in &segments {
        let (x1, y1) = frame.px(*p);
        let (x2, y2) = frame.px(*q);
        let _ = writeln!(
            out,
            r#"<line class="boundary" data-pair="{} {}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-width="1"/>"#,
            i + 1,
            j + 1
        );
    }
    for (l, x) in data.points().enumerate() {
        let (cx, cy) = frame.px([x[0], x[1]]);
        let color = PALETTE[data.label(l) % PALETTE.len()];
        let (class, r) = if options.support_vectors.contains(&l) { ("point sv", 5.0) } else { ("point", 2.5) };
        let _ = writeln!(out, r#"<circle class="{class}" cx="{cx:.3}" cy="{cy:.3}" r="{r}" fill="{color}"/>"#);
    }
    for i in 0..k {
        let s = diagram.sites.site(i);
        let (cx, cy) = frame.px([s[0], s[1]]);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<circle class="site" cx="{cx:.3}" cy="{cy:.3}" r="7" fill="{color}" stroke="black" stroke-width="1.5"/>"#
        );
    }
    let legend = if epsilon > 0.0 {
        format!("margin {epsilon:.6}")
    } else {
        format!("margin {epsilon:.6} (no band: margin not positive)")
    };
    let _ = writeln!(out, r#"<text class="legend" x="8" y="{:.0}" font-family="sans-serif" font-size="14">{legend}</text>"#, size + 26.0);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SiteSet;

    fn four_clusters() -> (PowerDiagram, Dataset) {
        let sites = SiteSet::new(vec![vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0], vec![4.0, 4.0]]).unwrap();
        let p = PowerDiagram::from_weights(sites, &[0.0; 4]).unwrap();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for (i, c) in [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]].iter().enumerate() {
            for off in [[-0.5, 0.2], [0.4, -0.3], [0.1, 0.5]] {
                pts.push(vec![c[0] + off[0], c[1] + off[1]]);
                labels.push(i);
            }
        }
        (p, Dataset::new(pts, labels, 4).unwrap())
    }

    #[test]
    fn element_counts() {
        let (p, data) = four_clusters();
        let opts = SvgOptions { support_vectors: vec![0, 5], ..SvgOptions::default() };
        let svg = emit_svg(&p, &data, 1.5, &opts).unwrap();
        assert_eq!(svg.matches(r#"class="site""#).count(), 4);
        assert_eq!(svg.matches(r#"class="point""#).count(), 10);
        assert_eq!(svg.matches(r#"class="point sv""#).count(), 2);
        // Voronoi grid: four half-line boundaries meeting at (2, 2), diagonals degenerate
        assert_eq!(svg.matches(r#"class="boundary""#).count(), 4);
        assert_eq!(svg.matches(r#"class="band""#).count(), 4);
        assert_eq!(svg, emit_svg(&p, &data, 1.5, &opts).unwrap());
    }

    #[test]
    fn nonpositive_margin_has_no_band() {
        let (p, data) = four_clusters();
        let svg = emit_svg(&p, &data, -0.5, &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches(r#"class="band""#).count(), 0);
        assert!(svg.contains("no band"));
    }

    #[test]
    fn rejects_other_dimensions() {
        let s = SiteSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let p = PowerDiagram::new(s, vec![0.0, 0.0]).unwrap();
        let d = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        assert!(emit_svg(&p, &d, 1.0, &SvgOptions::default()).is_err());
    }
}
