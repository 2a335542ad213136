//! Standalone SVG rendering of symmetric maps.

use std::fmt::Write as _;

use thiserror::Error;

use crate::scores::{MapCoordinates, MapPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvgError {
    #[error("a map needs at least one row point and one column point")]
    EmptyMap,
    #[error("invalid map style: {0}")]
    InvalidStyle(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapStyle {
    pub width: u32,
    pub height: u32,
    pub row_color: String,
    pub col_color: String,
    pub row_labels: bool,
    pub col_labels: bool,
    pub point_size: f64,
    /// Fraction of each dimension kept free around the plot area.
    pub margin: f64,
    pub font_size: f64,
}

impl Default for MapStyle {
    fn default() -> Self {
        MapStyle {
            width: 800,
            height: 600,
            row_color: "#1f77b4".into(),
            col_color: "#d62728".into(),
            row_labels: true,
            col_labels: true,
            point_size: 4.0,
            margin: 0.1,
            font_size: 12.0,
        }
    }
}

impl MapStyle {
    pub fn validate(&self) -> Result<(), SvgError> {
        if self.width == 0 || self.height == 0 {
            return Err(SvgError::InvalidStyle("dimensions must be positive".into()));
        }
        if !(0.0..0.4).contains(&self.margin) {
            return Err(SvgError::InvalidStyle("margin must be in [0, 0.4)".into()));
        }
        if !(self.point_size > 0.0 && self.font_size > 0.0) {
            return Err(SvgError::InvalidStyle("point and font sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Affine, aspect-preserving map from data to pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub scale: f64,
    pub cx: f64,
    pub cy: f64,
    pub px: f64,
    pub py: f64,
}

impl Viewport {
    /// Fits every point and the origin into the plot area. All points at
    /// the origin fall back to a unit extent.
    pub fn fit(points: &[&MapPoint], style: &MapStyle) -> Viewport {
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for p in points {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        let mut span_x = xmax - xmin;
        let mut span_y = ymax - ymin;
        if span_x <= 0.0 && span_y <= 0.0 {
            xmin = -0.5;
            ymin = -0.5;
            span_x = 1.0;
            span_y = 1.0;
        }
        let w = f64::from(style.width) * (1.0 - 2.0 * style.margin);
        let h = f64::from(style.height) * (1.0 - 2.0 * style.margin);
        let scale = match (span_x > 0.0, span_y > 0.0) {
            (true, true) => (w / span_x).min(h / span_y),
            (true, false) => w / span_x,
            _ => h / span_y,
        };
        Viewport {
            scale,
            cx: xmin + span_x / 2.0,
            cy: ymin + span_y / 2.0,
            px: f64::from(style.width) / 2.0,
            py: f64::from(style.height) / 2.0,
        }
    }

    pub fn to_pixels(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.px + (x - self.cx) * self.scale,
            self.py - (y - self.cy) * self.scale,
        )
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Eight compass directions for label offsets, picked by rank order.
const LABEL_DIRECTIONS: [(f64, f64); 8] = [
    (1.0, -1.0),
    (1.0, 1.0),
    (-1.0, -1.0),
    (-1.0, 1.0),
    (0.0, -1.4),
    (1.4, 0.0),
    (0.0, 1.4),
    (-1.4, 0.0),
];

fn fmt_px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Renders rows as circles and columns as squares on a shared frame with
/// crosshair axes through the origin.
pub fn render_map(map: &MapCoordinates, style: &MapStyle, title: &str) -> Result<String, SvgError> {
    style.validate()?;
    if map.row_points.is_empty() || map.col_points.is_empty() {
        return Err(SvgError::EmptyMap);
    }
    let all: Vec<&MapPoint> = map.row_points.iter().chain(&map.col_points).collect();
    let view = Viewport::fit(&all, style);
    let (w, h) = (style.width, style.height);
    let (ox, oy) = view.to_pixels(0.0, 0.0);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"  <title>{}</title>"#, escape(title));
    let _ = writeln!(svg, r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"  <g class="axes" stroke="gray" stroke-width="1" stroke-dasharray="4,3">"#
    );
    let _ = writeln!(svg, r#"    <line x1="0" y1="{0}" x2="{w}" y2="{0}"/>"#, fmt_px(oy));
    let _ = writeln!(svg, r#"    <line x1="{0}" y1="0" x2="{0}" y2="{h}"/>"#, fmt_px(ox));
    let _ = writeln!(svg, "  </g>");
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="{}" font-size="{}" text-anchor="middle" font-weight="bold">{}</text>"#,
        w / 2,
        fmt_px(style.font_size * 1.6),
        fmt_px(style.font_size * 1.25),
        escape(title)
    );
    let (alpha, beta) = map.axes;
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="{}" font-size="{}" text-anchor="end">Axis {alpha} (δ = {:.4})</text>"#,
        fmt_px(f64::from(w) - 6.0),
        fmt_px(oy - 6.0),
        fmt_px(style.font_size),
        map.deltas.0
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{}" y="{}" font-size="{}">Axis {beta} (δ = {:.4})</text>"#,
        fmt_px(ox + 6.0),
        fmt_px(style.font_size * 3.0),
        fmt_px(style.font_size),
        map.deltas.1
    );

    // Rank of each point by (x, y) chooses its label direction.
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&i, &j| {
        all[i]
            .x
            .total_cmp(&all[j].x)
            .then(all[i].y.total_cmp(&all[j].y))
            .then(i.cmp(&j))
    });
    let mut rank = vec![0usize; all.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }

    let r = style.point_size;
    let n_rows = map.row_points.len();
    for (kind, points, color, labels, offset) in [
        ("row", &map.row_points, &style.row_color, style.row_labels, 0),
        ("col", &map.col_points, &style.col_color, style.col_labels, n_rows),
    ] {
        let _ = writeln!(svg, r#"  <g class="{kind}s" fill="{}">"#, escape(color));
        for (k, p) in points.iter().enumerate() {
            let (x, y) = view.to_pixels(p.x, p.y);
            if kind == "row" {
                let _ = writeln!(
                    svg,
                    r#"    <circle class="point row-point" cx="{}" cy="{}" r="{}"/>"#,
                    fmt_px(x),
                    fmt_px(y),
                    fmt_px(r)
                );
            } else {
                let _ = writeln!(
                    svg,
                    r#"    <rect class="point col-point" x="{}" y="{}" width="{}" height="{}"/>"#,
                    fmt_px(x - r),
                    fmt_px(y - r),
                    fmt_px(2.0 * r),
                    fmt_px(2.0 * r)
                );
            }
            if labels {
                let (dx, dy) = LABEL_DIRECTIONS[rank[offset + k] % LABEL_DIRECTIONS.len()];
                let dist = r + 2.0;
                let anchor = if dx > 0.0 {
                    "start"
                } else if dx < 0.0 {
                    "end"
                } else {
                    "middle"
                };
                let _ = writeln!(
                    svg,
                    r#"    <text class="label" x="{}" y="{}" font-size="{}" text-anchor="{anchor}">{}</text>"#,
                    fmt_px(x + dx * dist),
                    fmt_px(y + dy * dist + style.font_size / 3.0),
                    fmt_px(style.font_size),
                    escape(&p.label)
                );
            }
        }
        let _ = writeln!(svg, "  </g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Method;

    fn point(label: &str, x: f64, y: f64) -> MapPoint {
        MapPoint {
            label: label.into(),
            x,
            y,
        }
    }

    fn map(rows: Vec<MapPoint>, cols: Vec<MapPoint>) -> MapCoordinates {
        MapCoordinates {
            axes: (1, 2),
            method: Method::Tlra,
            deltas: (1.0, 0.5),
            row_points: rows,
            col_points: cols,
        }
    }

    fn count_points(svg: &str) -> usize {
        let doc = roxmltree::Document::parse(svg).expect("well-formed XML");
        doc.descendants()
            .filter(|n| n.attribute("class").is_some_and(|c| c.split(' ').any(|t| t == "point")))
            .count()
    }

    #[test]
    fn escapes_labels_and_counts_points() {
        let m = map(
            vec![point("a<b & \"c\"", 1.0, 2.0), point("d", -1.0, 0.5)],
            vec![point("e", 0.3, -0.2)],
        );
        let svg = render_map(&m, &MapStyle::default(), "T & T").unwrap();
        assert_eq!(count_points(&svg), 3);
        assert!(svg.contains("a&lt;b &amp; &quot;c&quot;"));
    }

    #[test]
    fn coincident_points_fall_back_to_unit_view() {
        let m = map(vec![point("r", 0.0, 0.0)], vec![point("c", 0.0, 0.0)]);
        let svg = render_map(&m, &MapStyle::default(), "origin").unwrap();
        assert_eq!(count_points(&svg), 2);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn empty_map_and_bad_style_rejected() {
        let m = map(vec![], vec![point("c", 1.0, 1.0)]);
        assert_eq!(render_map(&m, &MapStyle::default(), ""), Err(SvgError::EmptyMap));
        let style = MapStyle {
            margin: 0.4,
            ..Default::default()
        };
        let m = map(vec![point("r", 1.0, 1.0)], vec![point("c", 1.0, 1.0)]);
        assert!(matches!(render_map(&m, &style, ""), Err(SvgError::InvalidStyle(_))));
    }

    #[test]
    fn viewport_preserves_aspect() {
        let pts = [point("a", -3.0, 1.0), point("b", 5.0, -2.0), point("c", 1.0, 4.0)];
        let refs: Vec<&MapPoint> = pts.iter().collect();
        let v = Viewport::fit(&refs, &MapStyle::default());
        let (x0, y0) = v.to_pixels(0.0, 0.0);
        let (x1, _) = v.to_pixels(1.0, 0.0);
        let (_, y1) = v.to_pixels(0.0, 1.0);
        assert!(((x1 - x0) - (y0 - y1)).abs() < 1e-12);
        for p in &pts {
            let (x, y) = v.to_pixels(p.x, p.y);
            assert!((0.0..=800.0).contains(&x) && (0.0..=600.0).contains(&y));
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let m = map(vec![point("r", 0.1, 0.7)], vec![point("c", -0.4, 0.2)]);
        let style = MapStyle::default();
        assert_eq!(render_map(&m, &style, "x").unwrap(), render_map(&m, &style, "x").unwrap());
    }
}
