//! SVG picture of a disc ball. Edges are drawn as the circular arcs of the
//! hyperbolic lines through their endpoints.

use std::fmt::Write;

use anyhow::{bail, Result};
use num_complex::Complex64;

use crate::grid::GridBall;
use crate::oracle::Geodesic;

const SIZE: f64 = 800.0;
const DISC: f64 = 390.0;
/// Below this sagitta (pixels) an arc is drawn as a chord.
const FLAT: f64 = 0.5;

fn px(z: Complex64) -> (f64, f64) {
    (SIZE / 2.0 + DISC * z.re, SIZE / 2.0 - DISC * z.im)
}

/// SVG path command from the current point `a` to `b` along the geodesic.
fn edge_to(a: Complex64, b: Complex64) -> String {
    let (bx, by) = px(b);
    if let Geodesic::Circle { center, radius } = Geodesic::through(a, b) {
        let r = radius * DISC;
        let half = (b - a).norm() * DISC / 2.0;
        let sagitta = r - (r * r - half * half).max(0.0).sqrt();
        if sagitta >= FLAT {
            // a counter-clockwise turn in the disc is a positive-angle
            // (visually clockwise) sweep once y points down
            let cross = (a - center).re * (b - center).im - (a - center).im * (b - center).re;
            let sweep = u8::from(cross > 0.0);
            return format!("A {r:.3} {r:.3} 0 0 {sweep} {bx:.3} {by:.3}");
        }
    }
    format!("L {bx:.3} {by:.3}")
}

fn polygon(vertices: &[Complex64]) -> String {
    let (x0, y0) = px(vertices[0]);
    let mut d = format!("M {x0:.3} {y0:.3}");
    for k in 0..vertices.len() {
        let (a, b) = (vertices[k], vertices[(k + 1) % vertices.len()]);
        d.push(' ');
        d.push_str(&edge_to(a, b));
    }
    d.push_str(" Z");
    d
}

pub struct RenderOptions {
    pub highlight: Vec<usize>,
    pub labels: bool,
}

pub fn render_svg(ball: &GridBall, opts: &RenderOptions) -> Result<String> {
    if ball.tiles().iter().any(|t| t.vertices.is_empty()) {
        bail!("the ball carries no geometry; build it from the oracle");
    }
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )?;
    writeln!(
        out,
        r##"<circle cx="{c}" cy="{c}" r="{DISC}" fill="#fdfdf8" stroke="#333" stroke-width="1"/>"##,
        c = SIZE / 2.0
    )?;
    for (t, tile) in ball.tiles().iter().enumerate() {
        let fill = if opts.highlight.contains(&t) {
            "#f4b642"
        } else if tile.id.is_center() {
            "#c9dcf0"
        } else {
            "none"
        };
        writeln!(
            out,
            r##"<path d="{}" fill="{fill}" stroke="#555" stroke-width="0.6"/>"##,
            polygon(&tile.vertices)
        )?;
    }
    if opts.highlight.len() > 1 {
        let centers: Vec<Complex64> = opts
            .highlight
            .iter()
            .map(|&t| ball.tile(t).center.unwrap_or_default())
            .collect();
        let (x0, y0) = px(centers[0]);
        let mut d = format!("M {x0:.3} {y0:.3}");
        for w in centers.windows(2) {
            d.push(' ');
            d.push_str(&edge_to(w[0], w[1]));
        }
        writeln!(
            out,
            r##"<path d="{d}" fill="none" stroke="#b3261e" stroke-width="2"/>"##
        )?;
    }
    if opts.labels {
        for tile in ball.tiles() {
            let z = tile.center.unwrap_or_default();
            // skip labels on tiles too small to read
            let scale = (1.0 - z.norm_sqr()) * DISC;
            if scale < 40.0 {
                continue;
            }
            let (x, y) = px(z);
            let size = (scale / 8.0).min(14.0);
            writeln!(
                out,
                r#"<text x="{x:.3}" y="{y:.3}" font-size="{size:.1}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                tile.id
            )?;
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ball, build_ball_from_rules, Tiling};

    #[test]
    fn draws_every_tile() {
        let ball = build_ball(Tiling::Hepta, 2).unwrap();
        let svg = render_svg(
            &ball,
            &RenderOptions {
                highlight: vec![0, 1, 8],
                labels: true,
            },
        )
        .unwrap();
        assert_eq!(svg.matches("<path").count(), ball.len() + 1);
        assert!(svg.contains(" A "));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn rule_balls_have_no_geometry() {
        let ball = build_ball_from_rules(Tiling::Penta, 2).unwrap();
        let opts = RenderOptions {
            highlight: vec![],
            labels: false,
        };
        assert!(render_svg(&ball, &opts).is_err());
    }
}
