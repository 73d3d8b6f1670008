//! Deterministic random disk meshes: a smooth star-shaped outline sampled at
//! even angles, random interior points, and their constrained Delaunay
//! triangulation.

use std::f64::consts::TAU;

use afm::domain::make_star;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use thiserror::Error;

use crate::obj::ObjMesh;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("triangulation failed: {0}")]
    Triangulation(#[from] spade::InsertionError),
    #[error("cannot build a disk with {triangles} triangles and {boundary} boundary vertices")]
    Size { triangles: usize, boundary: usize },
    #[error("triangulation lost {0} input points")]
    LostPoints(usize),
    #[error("triangle size range {0}..={1} is empty")]
    Range(usize, usize),
}

/// Parameters of one generated disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskParams {
    /// Requested triangle count; chord removal may add a few.
    pub triangles: usize,
    /// Boundary vertex count; defaults to a density-matched value of at
    /// least 64.
    pub boundary: Option<usize>,
    /// Lift onto a random height field instead of staying in the plane.
    pub height_field: bool,
    pub seed: u64,
}

/// Boundary vertex count whose spacing matches the interior density.
pub fn default_boundary(triangles: usize) -> usize {
    let b = ((2.3 * (triangles as f64).sqrt()).round() as usize).max(64);
    b + (b + triangles) % 2
}

struct Outline {
    pts: Vec<[f64; 2]>,
}

impl Outline {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Outline {
        let waves: Vec<(f64, f64, f64)> =
            (2..5).map(|k| (k as f64, rng.random_range(0.0..0.12), rng.random_range(0.0..TAU))).collect();
        let stretch = rng.random_range(0.7..1.0);
        let pts = (0..n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                let r = 1.0 + waves.iter().map(|&(k, amp, ph)| amp * (k * a + ph).cos()).sum::<f64>();
                [r * a.cos(), stretch * r * a.sin()]
            })
            .collect();
        Outline { pts }
    }

    /// Distance from the origin to the outline along the ray through `p`.
    fn radius_toward(&self, p: [f64; 2]) -> f64 {
        let n = self.pts.len();
        let a = p[1].atan2(p[0]).rem_euclid(TAU);
        // the outline points sit at even angles only before the y stretch, so
        // scan the few candidate segments around the estimate
        let guess = (a / TAU * n as f64) as usize;
        let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let d = [p[0] / len, p[1] / len];
        let mut best = f64::INFINITY;
        for off in 0..n {
            for k in [guess + n - off, guess + off] {
                let (s, e) = (self.pts[k % n], self.pts[(k + 1) % n]);
                let edge = [e[0] - s[0], e[1] - s[1]];
                let den = d[0] * edge[1] - d[1] * edge[0];
                if den.abs() < 1e-300 {
                    continue;
                }
                // ray t * d meets s + u * edge
                let t = (s[0] * edge[1] - s[1] * edge[0]) / den;
                let u = (s[0] * d[1] - s[1] * d[0]) / den;
                if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
                    best = best.min(t);
                }
            }
            if best.is_finite() {
                return best;
            }
        }
        best
    }

    fn contains(&self, p: [f64; 2], margin: f64) -> bool {
        let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
        len == 0.0 || len < self.radius_toward(p) - margin
    }
}

/// One random disk.
pub fn generate_disk(params: DiskParams) -> Result<ObjMesh, CorpusError> {
    let t = params.triangles;
    let b = params.boundary.unwrap_or_else(|| default_boundary(t));
    if b < 3 || t + 2 < b || !(t + 2 - b).is_multiple_of(2) {
        return Err(CorpusError::Size { triangles: t, boundary: b });
    }
    let interior = (t + 2 - b) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let outline = Outline::new(b, &mut rng);
    let perimeter: f64 = (0..b)
        .map(|i| {
            let (p, q) = (outline.pts[i], outline.pts[(i + 1) % b]);
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .sum();
    let h = perimeter / b as f64;

    let mut pts = outline.pts.clone();
    // rejection sampling with a minimum spacing, relaxed if the domain fills up
    let cell = 0.4 * h;
    let mut grid: std::collections::HashMap<(i64, i64), Vec<[f64; 2]>> = Default::default();
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut min_d = 0.4 * h;
    let mut misses = 0;
    while pts.len() < b + interior {
        let p = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        if !outline.contains(p, 0.45 * h) {
            continue;
        }
        let (kx, ky) = key(p);
        let crowded = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(kx + dx, ky + dy))
                    .is_some_and(|c| c.iter().any(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) < min_d * min_d))
            })
        });
        if crowded {
            misses += 1;
            if misses > 1000 {
                min_d *= 0.8;
                misses = 0;
            }
            continue;
        }
        grid.entry((kx, ky)).or_default().push(p);
        pts.push(p);
    }

    let constraints: Vec<[usize; 2]> = (0..b).map(|i| [i, (i + 1) % b]).collect();
    let tris = loop {
        let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(
            pts.iter().map(|p| Point2::new(p[0], p[1])).collect(),
            constraints.clone(),
        )?;
        if cdt.num_vertices() != pts.len() {
            return Err(CorpusError::LostPoints(pts.len() - cdt.num_vertices()));
        }
        // interior edges joining two boundary vertices get a midpoint
        let chords: Vec<[f64; 2]> = cdt
            .undirected_edges()
            .filter_map(|e| {
                let [u, v] = e.vertices().map(|x| x.fix().index());
                let adjacent = (u + 1) % b == v || (v + 1) % b == u;
                if u >= b || v >= b || adjacent {
                    return None;
                }
                let [p, q] = e.positions();
                let m = [(p.x + q.x) / 2.0, (p.y + q.y) / 2.0];
                outline.contains(m, 0.0).then_some(m)
            })
            .collect();
        if chords.is_empty() {
            break cdt
                .inner_faces()
                .filter_map(|f| {
                    let [p, q, r] = f.positions();
                    let c = [(p.x + q.x + r.x) / 3.0, (p.y + q.y + r.y) / 3.0];
                    outline.contains(c, 0.0).then(|| f.vertices().map(|v| v.fix().index() as u32))
                })
                .collect::<Vec<[u32; 3]>>();
        }
        pts.extend(chords);
    };

    let (amp, fx, fy, px, py) = (
        rng.random_range(0.15..0.45),
        rng.random_range(1.0..3.0),
        rng.random_range(1.0..3.0),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
    );
    let z = |p: [f64; 2]| if params.height_field { amp * (fx * p[0] + px).sin() * (fy * p[1] + py).cos() } else { 0.0 };
    let positions = pts.iter().map(|&p| [p[0], p[1], z(p)]).collect();
    Ok(ObjMesh { positions, triangles: tris })
}

/// A named corpus member.
#[derive(Debug, Clone)]
pub struct CorpusMesh {
    pub name: String,
    pub params: DiskParams,
    pub mesh: ObjMesh,
}

/// `count` disks with triangle counts log-uniform in `min..=max`, planar and
/// height-field meshes alternating.
pub fn generate_corpus(count: usize, min: usize, max: usize, seed: u64) -> Result<Vec<CorpusMesh>, CorpusError> {
    if min == 0 || min > max {
        return Err(CorpusError::Range(min, max));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let x: f64 = rng.random_range(0.0..=1.0);
            let triangles = ((min as f64).ln() + x * ((max as f64).ln() - (min as f64).ln())).exp().round() as usize;
            let params = DiskParams {
                triangles: triangles.clamp(min, max),
                boundary: None,
                height_field: i % 2 == 1,
                seed: rng.random(),
            };
            let mesh = generate_disk(params)?;
            Ok(CorpusMesh { name: format!("disk-{i:04}"), params, mesh })
        })
        .collect()
}

/// Outline of the `points`-tip star with `ratio` notches, triangulated by
/// one ear per tip and a fan over the notch polygon. Vertex `2i` is tip `i`.
pub fn star_outline(points: usize, ratio: f64) -> Result<ObjMesh, afm::domain::DomainError> {
    let star = make_star(points, ratio)?;
    let n = 2 * points as u32;
    let positions = star
        .polygon
        .iter()
        .map(|p| {
            let [x, y] = p.to_f64();
            [x, y, 0.0]
        })
        .collect();
    let mut triangles: Vec<[u32; 3]> =
        (0..points as u32).map(|i| [2 * i + 1, (2 * i + 2) % n, (2 * i + 3) % n]).collect();
    triangles.extend((1..points as u32 - 1).map(|i| [1, 2 * i + 1, 2 * i + 3]));
    Ok(ObjMesh { positions, triangles })
}
