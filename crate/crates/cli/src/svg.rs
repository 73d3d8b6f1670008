//! SVG 1.1 rendering of planar triangle meshes.

use std::fmt::Write as _;

use afm::engine::TraceFrame;
use afm::geom::{orient2d_f64, Sign};
use afm::mesh::TriId;

#[derive(Debug, Clone, Default)]
pub struct RenderOptions<'a> {
    /// Target polygon drawn under the mesh.
    pub polygon: Option<Vec<[f64; 2]>>,
    /// Triangles to fill as inverted. When `None`, they are detected from
    /// the binary64 positions.
    pub inverted: Option<Vec<TriId>>,
    pub trace: Option<&'a [TraceFrame]>,
    pub origin: Option<[f64; 2]>,
    pub size: f64,
}

/// Renders the mesh scaled into a square canvas with `y` pointing up.
pub fn render(positions: &[[f64; 2]], triangles: &[[u32; 3]], opts: &RenderOptions) -> String {
    let size = if opts.size > 0.0 { opts.size } else { 800.0 };
    let mut pts: Vec<[f64; 2]> = triangles.iter().flatten().map(|&v| positions[v as usize]).collect();
    if let Some(poly) = &opts.polygon {
        pts.extend(poly);
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if pts.is_empty() {
        (lo, hi) = ([0.0; 2], [1.0; 2]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let margin = 0.02 * size;
    let scale = (size - 2.0 * margin) / span;
    let map = |p: [f64; 2]| [margin + (p[0] - lo[0]) * scale, size - margin - (p[1] - lo[1]) * scale];
    let stroke = (size / 1600.0).max(0.25);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(poly) = &opts.polygon {
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#fde0dc" stroke="#c0392b" stroke-width="{}"/>"##,
            points(poly.iter().map(|&p| map(p))),
            3.0 * stroke
        );
    }

    let inverted: Vec<TriId> = match &opts.inverted {
        Some(list) => list.clone(),
        None => triangles
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                orient2d_f64(positions[t[0] as usize], positions[t[1] as usize], positions[t[2] as usize])
                    != Sign::Positive
            })
            .map(|(i, _)| i as TriId)
            .collect(),
    };
    let _ = writeln!(s, r#"<g fill="none" stroke="black" stroke-width="{stroke}" stroke-linejoin="round">"#);
    for t in triangles {
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, points(t.iter().map(|&v| map(positions[v as usize]))));
    }
    let _ = writeln!(s, "</g>");
    if !inverted.is_empty() {
        let _ = writeln!(s, r##"<g fill="#1f6fd1" fill-opacity="0.8" stroke="#0b3a75" stroke-width="{stroke}">"##);
        for &i in &inverted {
            let t = triangles[i as usize];
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, points(t.iter().map(|&v| map(positions[v as usize]))));
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(frames) = opts.trace {
        let _ =
            writeln!(s, r##"<g fill="none" stroke="#27ae60" stroke-width="{}" stroke-opacity="0.7">"##, 2.0 * stroke);
        for f in frames {
            let _ = writeln!(
                s,
                r#"<polygon points="{}"><title>{} moves</title></polygon>"#,
                points(f.front.iter().map(|&p| map(p))),
                f.moves
            );
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(o) = opts.origin {
        let [x, y] = map(o);
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="{}" fill="#e67e22"/>"##, 4.0 * stroke);
    }
    s.push_str("</svg>\n");
    s
}

fn points(it: impl Iterator<Item = [f64; 2]>) -> String {
    let mut s = String::new();
    for [x, y] in it {
        if !s.is_empty() {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    s
}

/// Trace frames as text: one frame per line, the move count followed by the
/// front polyline coordinates.
pub fn trace_to_text(frames: &[TraceFrame]) -> String {
    let mut s = String::new();
    for f in frames {
        let _ = write!(s, "{}", f.moves);
        for p in &f.front {
            let _ = write!(s, " {} {}", p[0], p[1]);
        }
        s.push('\n');
    }
    s
}

pub fn trace_from_text(text: &str) -> Result<Vec<TraceFrame>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let mut tok = l.split_whitespace();
            let bad = || format!("trace line {}: malformed", i + 1);
            let moves = tok.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
            let nums: Vec<f64> = tok.map(|t| t.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
            if !nums.len().is_multiple_of(2) {
                return Err(bad());
            }
            Ok(TraceFrame { moves, front: nums.chunks(2).map(|c| [c[0], c[1]]).collect() })
        })
        .collect()
}
