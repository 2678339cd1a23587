//! Self-contained SVG figures: neighbourhood panels over the black box's
//! decision regions, and grouped attribution bars.

use std::fmt::Write as _;
use std::path::Path;

use crate::blackbox::Bounds2;
use crate::data::format_real;
use crate::error::{Error, Result};
use crate::types::Explanation;

const PLOT: f64 = 300.0;
const TITLE: f64 = 24.0;
const GAP: f64 = 16.0;
const POINT_RADIUS: f64 = 2.0;
const DATA_RADIUS: f64 = 1.5;

const CLASS_FILL: [&str; 2] = ["#d62728", "#1f77b4"];
const REGION_FILL: [&str; 2] = ["#f7d4d4", "#d4e2f7"];
const FLAT_POINT: &str = "#1f3fbf";
const STAR_FILL: &str = "#e00000";
/// Weight ramp endpoints, light (lowest weight) to dark (highest), in percent.
const RAMP_LIGHT: [f64; 3] = [92.0, 92.0, 96.0];
const RAMP_DARK: [f64; 3] = [20.0, 0.0, 40.0];

/// One sub-plot. All coordinates are in data space.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    /// Decision labels over the shared bounds; row `i` is the `i`-th cell row from `y_min`.
    pub grid: Option<Vec<Vec<u8>>>,
    pub data: Vec<[f64; 2]>,
    pub data_labels: Vec<u8>,
    pub points: Vec<[f64; 2]>,
    pub weights: Option<Vec<f64>>,
    pub star: [f64; 2],
}

impl Panel {
    fn all_points(&self) -> impl Iterator<Item = &[f64]> {
        self.data
            .iter()
            .chain(&self.points)
            .chain(std::iter::once(&self.star))
            .map(|p| p.as_slice())
    }
}

/// Bounds holding every panel's data, points and star, padded by 5%.
pub fn shared_bounds(panels: &[Panel]) -> Option<Bounds2> {
    Bounds2::enclosing(panels.iter().flat_map(Panel::all_points), 0.05)
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    format!("{:.2}", v)
}

/// `rgb(r%, g%, b%)` on a ramp whose every channel falls as `t` rises, so a
/// larger `t` is never lighter.
pub fn weight_fill(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<String> = (0..3)
        .map(|k| format_real(RAMP_LIGHT[k] - t * (RAMP_LIGHT[k] - RAMP_DARK[k])))
        .collect();
    format!("rgb({}%,{}%,{}%)", c[0], c[1], c[2])
}

/// Five-pointed star path centred on `(cx, cy)`.
fn star_path(cx: f64, cy: f64, r: f64) -> String {
    let mut d = String::new();
    for k in 0..10 {
        let radius = if k % 2 == 0 { r } else { r * 0.45 };
        let a = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
        let cmd = if k == 0 { 'M' } else { 'L' };
        write!(d, "{cmd}{},{} ", num(cx + radius * a.cos()), num(cy + radius * a.sin())).unwrap();
    }
    d.push('Z');
    d
}

struct Frame {
    bounds: Bounds2,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        (v - self.bounds.x_min) / (self.bounds.x_max - self.bounds.x_min) * PLOT
    }

    fn y(&self, v: f64) -> f64 {
        TITLE + (self.bounds.y_max - v) / (self.bounds.y_max - self.bounds.y_min) * PLOT
    }
}

fn write_grid(out: &mut String, grid: &[Vec<u8>]) -> Result<()> {
    let rows = grid.len();
    let cols = grid.first().map(Vec::len).unwrap_or(0);
    if rows == 0 || cols == 0 || grid.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput(
            "decision grid must be a non-empty rectangle".into(),
        ));
    }
    let (cw, ch) = (PLOT / cols as f64, PLOT / rows as f64);
    for (i, row) in grid.iter().enumerate() {
        let y = TITLE + PLOT - (i + 1) as f64 * ch;
        let mut start = 0;
        while start < cols {
            let label = row[start];
            let mut end = start + 1;
            while end < cols && row[end] == label {
                end += 1;
            }
            writeln!(
                out,
                r#"<rect class="region" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(start as f64 * cw),
                num(y),
                num((end - start) as f64 * cw),
                num(ch),
                REGION_FILL[usize::from(label.min(1))]
            )
            .unwrap();
            start = end;
        }
    }
    Ok(())
}

fn write_panel(out: &mut String, panel: &Panel, frame: &Frame, ox: f64, oy: f64) -> Result<()> {
    writeln!(
        out,
        r#"<g class="panel" transform="translate({},{})">"#,
        num(ox),
        num(oy)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="16" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        num(PLOT / 2.0),
        escape(&panel.title)
    )
    .unwrap();
    if let Some(grid) = &panel.grid {
        write_grid(out, grid)?;
    }
    for (p, &l) in panel.data.iter().zip(&panel.data_labels) {
        writeln!(
            out,
            r#"<circle class="data" cx="{}" cy="{}" r="{DATA_RADIUS}" fill="{}" fill-opacity="0.5"/>"#,
            num(frame.x(p[0])),
            num(frame.y(p[1])),
            CLASS_FILL[usize::from(l.min(1))]
        )
        .unwrap();
    }
    match &panel.weights {
        None => {
            for p in &panel.points {
                writeln!(
                    out,
                    r#"<circle class="point" cx="{}" cy="{}" r="{POINT_RADIUS}" fill="{FLAT_POINT}"/>"#,
                    num(frame.x(p[0])),
                    num(frame.y(p[1]))
                )
                .unwrap();
            }
        }
        Some(w) => {
            let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
            for i in order {
                let t = if hi > lo { (w[i] - lo) / (hi - lo) } else { 1.0 };
                let p = panel.points[i];
                writeln!(
                    out,
                    r#"<circle class="point" cx="{}" cy="{}" r="{POINT_RADIUS}" fill="{}" data-weight="{}"/>"#,
                    num(frame.x(p[0])),
                    num(frame.y(p[1])),
                    weight_fill(t),
                    format_real(w[i])
                )
                .unwrap();
            }
        }
    }
    writeln!(
        out,
        r#"<path class="star" d="{}" fill="{STAR_FILL}" stroke="black" stroke-width="0.8"/>"#,
        star_path(frame.x(panel.star[0]), frame.y(panel.star[1]), 9.0)
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect class="frame" x="0" y="{TITLE}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    out.push_str("</g>\n");
    Ok(())
}

/// Panels on a `rows x cols` layout sharing `bounds`, which must enclose
/// every rendered point and star.
pub fn render_neighbourhood_panels(panels: &[Panel], rows: usize, cols: usize, bounds: &Bounds2) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::InvalidInput("nothing to render".into()));
    }
    if rows * cols < panels.len() {
        return Err(Error::InvalidInput(format!(
            "{} panels do not fit a {rows}x{cols} layout",
            panels.len()
        )));
    }
    if !(bounds.x_max > bounds.x_min && bounds.y_max > bounds.y_min) {
        return Err(Error::InvalidInput("plot bounds are empty".into()));
    }
    for panel in panels {
        if panel.data.len() != panel.data_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: panel.data.len(),
                got: panel.data_labels.len(),
            });
        }
        if let Some(w) = &panel.weights {
            if w.len() != panel.points.len() {
                return Err(Error::DimensionMismatch {
                    expected: panel.points.len(),
                    got: w.len(),
                });
            }
        }
        if let Some(p) = panel.all_points().find(|p| !bounds.contains(p)) {
            return Err(Error::InvalidInput(format!(
                "point ({}, {}) of panel '{}' lies outside the plot bounds",
                p[0], p[1], panel.title
            )));
        }
    }
    let frame = Frame { bounds: *bounds };
    let cell_w = PLOT + GAP;
    let cell_h = TITLE + PLOT + GAP;
    let width = cols as f64 * cell_w + GAP;
    let height = rows as f64 * cell_h + GAP;
    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        num(width),
        num(height)
    )
    .unwrap();
    for (k, panel) in panels.iter().enumerate() {
        let (r, c) = (k / cols, k % cols);
        write_panel(
            &mut out,
            panel,
            &frame,
            GAP + c as f64 * cell_w,
            GAP + r as f64 * cell_h,
        )?;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

const BAR_FILLS: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Grouped horizontal bars per feature, one bar per explanation with an
/// attribution, features ordered by largest absolute attribution.
pub fn render_attribution_bars(explanations: &[Explanation], names: &[String]) -> Result<String> {
    let series: Vec<(&Explanation, &Vec<f64>)> = explanations
        .iter()
        .filter_map(|e| e.attribution.as_ref().map(|a| (e, a)))
        .collect();
    let Some(&(_, first)) = series.first() else {
        return Err(Error::InvalidInput("no explanation carries an attribution".into()));
    };
    let d = first.len();
    if let Some((_, a)) = series.iter().find(|(_, a)| a.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.len(),
        });
    }
    if series.iter().flat_map(|(_, a)| a.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("attributions must be finite".into()));
    }
    let importance = |j: usize| series.iter().map(|(_, a)| a[j].abs()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| importance(b).total_cmp(&importance(a)).then(a.cmp(&b)));
    let max_abs = (0..d).map(importance).fold(0.0, f64::max);

    let (label_w, half, bar_h, group_gap) = (120.0, 200.0, 14.0, 10.0);
    let group_h = series.len() as f64 * bar_h + group_gap;
    let legend_h = 20.0 * series.len() as f64 + 10.0;
    let top = 20.0;
    let zero = label_w + half;
    let scale = if max_abs > 0.0 { (half - 10.0) / max_abs } else { 0.0 };
    let width = label_w + 2.0 * half + 20.0;
    let height = top + d as f64 * group_h + legend_h;

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    )
    .unwrap();
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        num(width),
        num(height)
    )
    .unwrap();
    out.push_str("<g class=\"bars\">\n");
    for (slot, &j) in order.iter().enumerate() {
        let y0 = top + slot as f64 * group_h;
        let name = names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{}</text>"#,
            num(label_w - 8.0),
            num(y0 + series.len() as f64 * bar_h / 2.0 + 4.0),
            escape(&name)
        )
        .unwrap();
        for (m, (e, a)) in series.iter().enumerate() {
            let v = a[j];
            let x = if v < 0.0 { zero + v * scale } else { zero };
            writeln!(
                out,
                r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{}" data-method="{}" data-feature="{j}" data-value="{}"/>"#,
                num(x),
                num(y0 + m as f64 * bar_h),
                num(v.abs() * scale),
                num(bar_h - 2.0),
                BAR_FILLS[m % BAR_FILLS.len()],
                e.method,
                format_real(v)
            )
            .unwrap();
        }
    }
    let bottom = top + d as f64 * group_h;
    writeln!(
        out,
        r#"<path class="zero" d="M{z},{} L{z},{}" stroke="black" stroke-width="1"/>"#,
        num(top - 5.0),
        num(bottom - group_gap + 5.0),
        z = num(zero)
    )
    .unwrap();
    for (m, (e, _)) in series.iter().enumerate() {
        let y = bottom + 10.0 + 20.0 * m as f64;
        writeln!(
            out,
            r#"<rect class="legend" x="{}" y="{}" width="12" height="12" fill="{}"/>"#,
            num(label_w),
            num(y),
            BAR_FILLS[m % BAR_FILLS.len()]
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{} ({})</text>"#,
            num(label_w + 18.0),
            num(y + 10.0),
            e.method,
            escape(&e.surrogate)
        )
        .unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

pub fn save_svg(svg: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
