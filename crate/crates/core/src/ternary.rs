//! Ternary diagrams for three-part compositions, drawn as SVG.
//!
//! Part 1 sits at the bottom-left vertex, part 2 at the bottom-right and
//! part 3 at the top. Iso-density contours of a latent normal are ellipses
//! in the transformed space; at α = 1 the inverse transform is affine, so
//! they stay ellipses in the triangle and are clipped to it.

use std::f64::consts::PI;
use std::fmt::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{mvn_logpdf, MvnParams};
use crate::sample::CompositionalDataset;
use crate::simplex::AlphaTransform;

/// Number of contour levels.
pub const LEVELS: usize = 6;

/// Squared Mahalanobis radius of the outermost contour: the 0.99 quantile
/// of χ² with 2 degrees of freedom, `-2 ln 0.01`.
pub const OUTER_RADIUS_SQ: f64 = 9.210_340_371_976_184;

/// Points per full contour before clipping.
const CONTOUR_RESOLUTION: usize = 720;

const HEIGHT: f64 = 0.866_025_403_784_438_6;

/// Plane coordinates of a three-part composition.
pub fn ternary_xy(parts: &[f64]) -> Result<[f64; 2]> {
    if parts.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: parts.len(),
        });
    }
    Ok([parts[1] + 0.5 * parts[2], HEIGHT * parts[2]])
}

/// Inverse of [`ternary_xy`].
pub fn ternary_parts(xy: [f64; 2]) -> [f64; 3] {
    let x3 = xy[1] / HEIGHT;
    let x2 = xy[0] - 0.5 * x3;
    [1.0 - x2 - x3, x2, x3]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourLevel {
    /// 1-based, counted outwards from the mean.
    pub index: usize,
    /// Squared Mahalanobis radius of the level set.
    pub mahalanobis_sq: f64,
    /// Latent log-density on the level set.
    pub log_density: f64,
    /// Pieces of the level set inside the triangle, in plane coordinates.
    #[serde(skip)]
    pub polylines: Vec<Vec<[f64; 2]>>,
}

/// Level `k` of `LEVELS` has squared Mahalanobis radius
/// `k / LEVELS * OUTER_RADIUS_SQ`, so log-density falls in equal steps from
/// the mode to the 99% ellipse.
pub fn contour_levels(model: &MvnParams) -> Result<Vec<ContourLevel>> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: model.dim(),
        });
    }
    let transform = AlphaTransform::new(3, 1.0)?;
    let peak = mvn_logpdf(model.mean(), model)?;
    let l = model.cholesky_factor();
    (1..=LEVELS)
        .map(|k| {
            let r2 = k as f64 / LEVELS as f64 * OUTER_RADIUS_SQ;
            let r = r2.sqrt();
            let at = |theta: f64| -> Result<Vec<f64>> {
                let u = DVector::from_vec(vec![r * theta.cos(), r * theta.sin()]);
                Ok(transform.inverse(&(model.mean() + l * u))?.parts)
            };
            Ok(ContourLevel {
                index: k,
                mahalanobis_sq: r2,
                log_density: peak - 0.5 * r2,
                polylines: clip_closed_curve(&at)?,
            })
        })
        .collect()
}

fn inside(parts: &[f64]) -> bool {
    parts.iter().all(|&p| p >= 0.0)
}

/// Splits the closed curve `at(θ)`, θ ∈ [0, 2π), into the runs that stay in
/// the simplex. Crossings are located on the curve by bisection in θ.
fn clip_closed_curve<F>(at: &F) -> Result<Vec<Vec<[f64; 2]>>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let step = 2.0 * PI / CONTOUR_RESOLUTION as f64;
    let thetas: Vec<f64> = (0..CONTOUR_RESOLUTION).map(|i| i as f64 * step).collect();
    let points = thetas.iter().map(|&t| at(t)).collect::<Result<Vec<_>>>()?;
    let flags: Vec<bool> = points.iter().map(|p| inside(p)).collect();
    if flags.iter().all(|&f| f) {
        let mut line = points
            .iter()
            .map(|p| ternary_xy(p))
            .collect::<Result<Vec<_>>>()?;
        line.push(line[0]);
        return Ok(vec![line]);
    }
    let edge = |a: f64, b: f64| -> Result<[f64; 2]> {
        // `a` is inside, `b` outside; `b` may be smaller than `a`.
        let (mut lo, mut hi) = (a, b);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(&at(mid)?) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut p = at(lo)?;
        for v in &mut p {
            *v = v.max(0.0);
        }
        ternary_xy(&p)
    };
    // Walk once around, starting just after an outside sample.
    let n = CONTOUR_RESOLUTION;
    let start = (0..n).find(|&i| !flags[i]).unwrap_or(0);
    let mut lines = Vec::new();
    let mut current: Vec<[f64; 2]> = Vec::new();
    for k in 1..=n {
        let i = (start + k) % n;
        let prev = (start + k - 1) % n;
        let (t_prev, t_i) = (thetas[prev], thetas[prev] + step);
        match (flags[prev], flags[i]) {
            (false, true) => {
                current = vec![edge(t_i, t_prev)?, ternary_xy(&points[i])?];
            }
            (true, true) => current.push(ternary_xy(&points[i])?),
            (true, false) => {
                current.push(edge(t_prev, t_i)?);
                lines.push(std::mem::take(&mut current));
            }
            (false, false) => {}
        }
    }
    Ok(lines)
}

/// Appearance of a ternary plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    /// Vertex labels for parts 1, 2 and 3.
    pub labels: [String; 3],
    /// Side length of the triangle in pixels.
    pub side: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            labels: ["x1".into(), "x2".into(), "x3".into()],
            side: 500.0,
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    contour_rule: &'static str,
    levels: &'a [ContourLevel],
    n_interior: usize,
    n_boundary: usize,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Ternary scatter of `data`, with boundary points drawn as crosses, and the
/// iso-density contours of `model` when given.
pub fn render_svg(
    data: &CompositionalDataset,
    model: Option<&MvnParams>,
    options: &PlotOptions,
) -> Result<String> {
    if data.parts() != 3 {
        return Err(Error::InvalidArgument(format!(
            "ternary plots need 3 parts, got {}",
            data.parts()
        )));
    }
    let levels = model.map(contour_levels).transpose()?.unwrap_or_default();
    let side = options.side;
    let margin = 0.12 * side;
    let width = side + 2.0 * margin;
    let height = HEIGHT * side + 2.0 * margin;
    let px = |p: [f64; 2]| (margin + p[0] * side, margin + (HEIGHT - p[1]) * side);

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    )
    .unwrap();
    let meta = Metadata {
        contour_rule: "level k of 6 is the latent ellipse with squared Mahalanobis radius k/6 * 9.2103 (chi-square 0.99 quantile, 2 df): equal log-density steps from the mode to the 99% ellipse",
        levels: &levels,
        n_interior: data.n_interior(),
        n_boundary: data.n_face(),
    };
    writeln!(
        w,
        "<metadata id=\"contour-levels\">{}</metadata>",
        escape(&serde_json::to_string(&meta).expect("metadata serializes"))
    )
    .unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    let corners = [[0.0, 0.0], [1.0, 0.0], [0.5, HEIGHT]].map(px);
    writeln!(
        w,
        r#"<polygon id="frame" points="{:.3},{:.3} {:.3},{:.3} {:.3},{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        corners[0].0, corners[0].1, corners[1].0, corners[1].1, corners[2].0, corners[2].1
    )
    .unwrap();
    let offsets = [(-0.04, 0.05), (0.04, 0.05), (0.0, -0.03)];
    let anchors = ["end", "start", "middle"];
    for i in 0..3 {
        writeln!(
            w,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="{}" font-family="sans-serif" font-size="16">{}</text>"#,
            corners[i].0 + offsets[i].0 * side,
            corners[i].1 + offsets[i].1 * side,
            anchors[i],
            escape(&options.labels[i])
        )
        .unwrap();
    }

    if !levels.is_empty() {
        writeln!(w, r##"<g id="contours" fill="none" stroke="#c0392b" stroke-width="1">"##).unwrap();
        for level in &levels {
            for line in &level.polylines {
                let pts: Vec<String> = line
                    .iter()
                    .map(|&p| {
                        let (x, y) = px(p);
                        format!("{x:.3},{y:.3}")
                    })
                    .collect();
                writeln!(
                    w,
                    r#"<polyline data-level="{}" points="{}"/>"#,
                    level.index,
                    pts.join(" ")
                )
                .unwrap();
            }
        }
        writeln!(w, "</g>").unwrap();
    }

    writeln!(w, r##"<g id="interior" fill="#1f4e9c" fill-opacity="0.7">"##).unwrap();
    for c in data.compositions().iter().filter(|c| c.is_interior()) {
        let (x, y) = px(ternary_xy(c.parts())?);
        writeln!(w, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2.5"/>"#).unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, r##"<g id="boundary" stroke="#1e9e3a" stroke-width="1.5">"##).unwrap();
    for c in data.compositions().iter().filter(|c| !c.is_interior()) {
        let (x, y) = px(ternary_xy(c.parts())?);
        let s = 4.0;
        writeln!(
            w,
            r#"<path d="M{:.3},{:.3}L{:.3},{:.3}M{:.3},{:.3}L{:.3},{:.3}"/>"#,
            x - s,
            y - s,
            x + s,
            y + s,
            x - s,
            y + s,
            x + s,
            y - s
        )
        .unwrap();
    }
    writeln!(w, "</g>").unwrap();
    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}
