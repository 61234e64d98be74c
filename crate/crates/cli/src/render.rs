use std::fmt::Write;

use hyperdimer::lattice::loops_through;
use hyperdimer::{Edge, Error, Result, Tiling, Vertex};

const CLASSES: [&str; 3] = ["#e8b04a", "#4a7fe8", "#6cc36c"];

/// Planar position of a vertex: `g_1, g_2, g_3` are unit vectors at 120 degrees.
fn position(x: &Vertex) -> (f64, f64) {
    let dirs = [(1.0, 0.0), (-0.5, 3f64.sqrt() / 2.0), (-0.5, -(3f64.sqrt()) / 2.0)];
    x.coords()
        .iter()
        .zip(dirs)
        .fold((0.0, 0.0), |(px, py), (&c, (dx, dy))| (px + c as f64 * dx, py + c as f64 * dy))
}

/// The lozenge of a tile: the two triangles on either side of the edge.
fn lozenge(e: &Edge) -> [Vertex; 4] {
    let [a, b] = e.endpoints();
    let apex: Vec<Vertex> = loops_through(e)
        .iter()
        .map(|s| {
            s.vertices()
                .into_iter()
                .find(|v| *v != a && *v != b)
                .expect("a triangle has a third vertex")
        })
        .collect();
    [a, apex[0].clone(), b, apex[1].clone()]
}

/// An SVG drawing of the tiles of `t` inside its window, one polygon per tile, filled by
/// the direction of its edge.
pub fn render_svg(t: &Tiling, header: &str) -> Result<String> {
    if t.dim().d() != 2 {
        return Err(Error::Invalid(format!(
            "rendering is only defined for d = 2, got d = {}",
            t.dim().d()
        )));
    }
    let mut tiles: Vec<Edge> = Vec::new();
    for x in t.window() {
        for dir in 0..3 {
            let e = Edge::new(x.clone(), dir);
            if t.contains(&e) {
                tiles.push(e);
            }
        }
    }
    let scale = 20.0;
    let polys: Vec<(usize, Vec<(f64, f64)>)> = tiles
        .iter()
        .map(|e| {
            let pts = lozenge(e)
                .iter()
                .map(|v| {
                    let (x, y) = position(v);
                    (x * scale, -y * scale)
                })
                .collect();
            (e.dir, pts)
        })
        .collect();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (0f64, 0f64, 0f64, 0f64);
    for (_, pts) in &polys {
        for &(x, y) in pts {
            lo_x = lo_x.min(x);
            lo_y = lo_y.min(y);
            hi_x = hi_x.max(x);
            hi_y = hi_y.max(y);
        }
    }
    let pad = scale;
    let mut out = String::new();
    writeln!(out, "<!-- {header} -->").unwrap();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.3} {:.3} {:.3} {:.3}">"#,
        lo_x - pad,
        lo_y - pad,
        hi_x - lo_x + 2.0 * pad,
        hi_y - lo_y + 2.0 * pad
    )
    .unwrap();
    for (dir, pts) in &polys {
        let points: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
        writeln!(
            out,
            r#"  <polygon class="tile-{}" points="{}" fill="{}" stroke="black" stroke-width="0.8"/>"#,
            dir + 1,
            points.join(" "),
            CLASSES[*dir]
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}
