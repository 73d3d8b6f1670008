//! Small hand-built intermediate states that trigger each front handler on
//! the first step. Useful for tests and for rendering the handlers.

use crate::geom::{ept, Point3};
use crate::mesh::{TriMesh, VertId};

use super::{AfmConfig, AfmError, MapState};

/// State with the `visited` triangles already mapped and an origin fan over
/// the front of the remaining `open` ones. Source positions are planar.
pub fn configuration(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
    visited: &[[u32; 3]],
    open: &[[u32; 3]],
    origin: VertId,
    config: AfmConfig,
) -> Result<MapState, AfmError> {
    let p3 = src.iter().map(|&(x, y)| Point3::from_f64([x, y, 0.0]).expect("finite source coordinate")).collect();
    let tris: Vec<[u32; 3]> = visited.iter().chain(open).copied().collect();
    let m1 = TriMesh::build(p3, tris.clone())?;
    let mut fan: Vec<[u32; 3]> = visited.to_vec();
    for t in open {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let inner = open.iter().any(|u| (0..3).any(|j| u[j] == b && u[(j + 1) % 3] == a));
            if !inner {
                fan.push([a, b, origin]);
            }
        }
    }
    let m2 = TriMesh::build(dst.iter().map(|&(x, y)| ept(x, y)).collect(), fan)?;
    let flags = (0..tris.len()).map(|i| i < visited.len()).collect();
    MapState::from_parts(m1, m2, origin, flags, config)
}

const SQUARE: [(f64, f64); 4] = [(-4., -4.), (4., -4.), (4., 4.), (-4., 4.)];

/// Front `vl=4, v=5, vr=6, u=7` around `O=8` inside the square `0..4`, with
/// `v` concave so the first step convexifies. With `spike`, vertex 9 sits just
/// after `vr` on the front and relocating `vr` must refine.
pub fn concave_front(spike: bool, config: AfmConfig) -> MapState {
    let mut dst = SQUARE.to_vec();
    dst.extend([(-2., -2.), (0., -1.), (2., -2.), (0., 2.), (0., 0.)]);
    let mut src = dst.clone();
    src[5] = (0., -2.5);
    let mut visited = vec![[0, 1, 6], [0, 6, 5], [0, 5, 4], [1, 2, 6], [2, 3, 7], [3, 4, 7], [3, 0, 4]];
    let mut open = vec![[4, 5, 6], [4, 6, 8], [7, 4, 8]];
    if spike {
        dst.push((1.5, -1.2));
        src.push((1.5, -1.2));
        visited.extend([[6, 2, 9], [9, 2, 7]]);
        open.extend([[6, 9, 8], [9, 7, 8]]);
    } else {
        visited.push([6, 2, 7]);
        open.push([6, 7, 8]);
    }
    configuration(&src, &dst, &visited, &open, 8, config).expect("valid layout")
}

/// Front `vll=4, vl=5, v=6, vr=7, u=8` around `O=9`, where `O` lies inside
/// the image of `(vl, v, vr)` so the flip at `v` needs a concavification.
pub fn origin_in_flip_triangle(config: AfmConfig) -> MapState {
    let mut dst = SQUARE.to_vec();
    dst.extend([(-1.5, 1.5), (-2., 0.5), (0., -2.), (2., 0.5), (0.5, 2.), (0., 0.)]);
    let mut src = SQUARE.to_vec();
    src.extend([(-2., 1.), (-2., -1.), (0., -2.5), (2., -1.), (0., 3.), (0., 0.8)]);
    let visited = [[0, 1, 6], [1, 7, 6], [1, 2, 7], [2, 8, 7], [2, 3, 8], [3, 4, 8], [3, 5, 4], [3, 0, 5], [0, 6, 5]];
    let open = [[5, 6, 7], [4, 5, 7], [4, 7, 9], [7, 8, 9], [8, 4, 9]];
    configuration(&src, &dst, &visited, &open, 9, config).expect("valid layout")
}
