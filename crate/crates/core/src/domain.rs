//! Target polygons, star-shaped kernels and the boundary correspondence.

use std::f64::consts::TAU;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::geom::{orient2d, orient2d_det, segment_line_param, Point2, Sign};
use crate::mesh::{MeshError, Position, TriMesh, VertId};
use crate::scalar::Scalar;
use crate::{ExactPoint2, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("a polygon needs at least 3 sides, got {0}")]
    TooFewSides(usize),
    #[error("star ratio must lie strictly between 0 and 1")]
    InvalidRatio,
    #[error("rounded circle approximation is not strictly convex")]
    NotStrictlyConvex,
    #[error("polygon is not star-shaped: its kernel is empty")]
    EmptyKernel,
    #[error("polygon kernel has empty interior")]
    DegenerateKernel,
    #[error("{have} boundary vertices cannot cover {need} polygon corners")]
    TooFewBoundaryVertices { have: usize, need: usize },
    #[error("source mesh is not a disk: {0}")]
    NotDisk(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Circle,
    Square,
    Star,
}

/// Counterclockwise target polygon and a point strictly inside its kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub polygon: Vec<ExactPoint2>,
    pub kernel: ExactPoint2,
}

/// Target positions for the source boundary loop, in loop order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMap {
    pub vertices: Vec<VertId>,
    pub positions: Vec<ExactPoint2>,
    /// Index into `vertices` of the vertex placed on each polygon corner.
    pub corner_slots: Vec<usize>,
}

fn dyadic(v: f64) -> f64 {
    const SCALE: f64 = (1u64 << 40) as f64;
    (v * SCALE).round() / SCALE
}

fn on_circle(r: f64, angle: f64) -> ExactPoint2 {
    Point2::from_f64([dyadic(r * angle.cos()), dyadic(r * angle.sin())]).expect("finite")
}

/// Regular `n`-gon inscribed in the unit circle, coordinates rounded to
/// multiples of 2^-40.
pub fn make_circle(n: usize) -> Result<DomainSpec, DomainError> {
    if n < 3 {
        return Err(DomainError::TooFewSides(n));
    }
    let polygon: Vec<ExactPoint2> = (0..n).map(|i| on_circle(1.0, TAU * i as f64 / n as f64)).collect();
    if !is_strictly_convex(&polygon) {
        return Err(DomainError::NotStrictlyConvex);
    }
    let kernel = kernel_point(&polygon)?;
    Ok(DomainSpec { kind: DomainKind::Circle, polygon, kernel })
}

pub fn make_square() -> DomainSpec {
    let p = |x: i64, y: i64| Point2::new(Rational::from_integer(x.into()), Rational::from_integer(y.into()));
    DomainSpec {
        kind: DomainKind::Square,
        polygon: vec![p(0, 0), p(1, 0), p(1, 1), p(0, 1)],
        kernel: Point2::new(Rational::from_ratio(1, 2), Rational::from_ratio(1, 2)),
    }
}

/// Star with `points` tips on the unit circle (first tip at angle 0) and
/// notches at radius `inner_ratio`.
pub fn make_star(points: usize, inner_ratio: f64) -> Result<DomainSpec, DomainError> {
    if points < 3 {
        return Err(DomainError::TooFewSides(points));
    }
    if !(inner_ratio > 0.0 && inner_ratio < 1.0) {
        return Err(DomainError::InvalidRatio);
    }
    let n = 2 * points;
    let polygon: Vec<ExactPoint2> = (0..n)
        .map(|i| {
            let r = if i % 2 == 0 { 1.0 } else { inner_ratio };
            on_circle(r, TAU * i as f64 / n as f64)
        })
        .collect();
    let kernel = kernel_point(&polygon)?;
    Ok(DomainSpec { kind: DomainKind::Star, polygon, kernel })
}

pub fn is_strictly_convex(polygon: &[ExactPoint2]) -> bool {
    let n = polygon.len();
    (0..n).all(|i| orient2d(&polygon[i], &polygon[(i + 1) % n], &polygon[(i + 2) % n]) == Sign::Positive)
}

/// Twice the signed area.
pub fn polygon_area2(poly: &[ExactPoint2]) -> Rational {
    let n = poly.len();
    let mut acc = Rational::zero();
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[(i + 1) % n]);
        acc += a.x.clone() * b.y.clone() - a.y.clone() * b.x.clone();
    }
    acc
}

/// Kernel of a counterclockwise polygon: the intersection of the closed left
/// half-planes of its edges.
pub fn kernel_polygon(polygon: &[ExactPoint2]) -> Vec<ExactPoint2> {
    let n = polygon.len();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in polygon {
        let d = p.to_f64();
        for k in 0..2 {
            lo[k] = lo[k].min(d[k]);
            hi[k] = hi[k].max(d[k]);
        }
    }
    let (x0, y0) = ((lo[0] - 1.0).floor(), (lo[1] - 1.0).floor());
    let (x1, y1) = ((hi[0] + 1.0).ceil(), (hi[1] + 1.0).ceil());
    let mut region: Vec<ExactPoint2> =
        [[x0, y0], [x1, y0], [x1, y1], [x0, y1]].iter().map(|&c| Point2::from_f64(c).expect("finite")).collect();
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[(i + 1) % n]);
        region = clip_closed(&region, a, b);
        if region.is_empty() {
            break;
        }
    }
    region
}

/// Clips a convex polygon by the closed half-plane left of `a -> b`.
pub(crate) fn clip_closed(region: &[ExactPoint2], a: &ExactPoint2, b: &ExactPoint2) -> Vec<ExactPoint2> {
    let mut out = Vec::with_capacity(region.len() + 1);
    let m = region.len();
    for i in 0..m {
        let (p, q) = (&region[i], &region[(i + 1) % m]);
        let (sp, sq) = (orient2d(a, b, p), orient2d(a, b, q));
        if sp != Sign::Negative {
            out.push(p.clone());
        }
        if (sp == Sign::Positive && sq == Sign::Negative) || (sp == Sign::Negative && sq == Sign::Positive) {
            let t = segment_line_param(p, q, a, b, false).expect("proper crossing");
            out.push(p.lerp(q, &t));
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// A point strictly inside the kernel: the vertex centroid of the kernel
/// polygon, replaced by its binary64 rounding when that is still strictly
/// inside.
pub fn kernel_point(polygon: &[ExactPoint2]) -> Result<ExactPoint2, DomainError> {
    let kernel = kernel_polygon(polygon);
    if kernel.is_empty() {
        return Err(DomainError::EmptyKernel);
    }
    if kernel.len() < 3 || !polygon_area2(&kernel).is_positive() {
        return Err(DomainError::DegenerateKernel);
    }
    let k = Rational::from_integer((kernel.len() as i64).into());
    let mut c = Point2::new(Rational::zero(), Rational::zero());
    for p in &kernel {
        c = c.add(p);
    }
    let c = Point2::new(c.x / k.clone(), c.y / k);
    let n = polygon.len();
    let strictly_inside =
        |p: &ExactPoint2| (0..n).all(|i| orient2d(&polygon[i], &polygon[(i + 1) % n], p) == Sign::Positive);
    debug_assert!(strictly_inside(&c));
    if let Some(r) = Point2::from_f64(c.to_f64()) {
        if strictly_inside(&r) {
            return Ok(r);
        }
    }
    Ok(c)
}

/// Whether `k` sees `v` inside the polygon: the open segment does not cross
/// or touch the boundary except at `v` itself.
pub fn sees(polygon: &[ExactPoint2], k: &ExactPoint2, v: &ExactPoint2) -> bool {
    let n = polygon.len();
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[(i + 1) % n]);
        if a == v || b == v {
            // edges incident to v: k must lie on their inner side
            if orient2d(a, b, k) == Sign::Negative {
                return false;
            }
            continue;
        }
        let d1 = orient2d(a, b, k);
        let d2 = orient2d(a, b, v);
        let d3 = orient2d(k, v, a);
        let d4 = orient2d(k, v, b);
        if d1 != d2 && d3 != d4 && d1 != Sign::Zero && d2 != Sign::Zero {
            return false;
        }
        // touching a vertex or an edge of the boundary also blocks sight
        if (d3 == Sign::Zero && between(k, v, a)) || (d4 == Sign::Zero && between(k, v, b)) {
            return false;
        }
    }
    true
}

fn between(p: &ExactPoint2, q: &ExactPoint2, x: &ExactPoint2) -> bool {
    let d = q.sub(p);
    let t = x.sub(p).dot(&d);
    t.is_positive() && t < d.dot(&d)
}

impl DomainSpec {
    /// Perimeter parameter in `[0, 1)` of each corner, by binary64 edge
    /// lengths.
    fn corner_params(&self) -> Vec<f64> {
        let n = self.polygon.len();
        let len: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (self.polygon[i].to_f64(), self.polygon[(i + 1) % n].to_f64());
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .collect();
        let total: f64 = len.iter().sum();
        let mut acc = 0.0;
        len.iter()
            .map(|l| {
                let s = acc / total;
                acc += l;
                s
            })
            .collect()
    }

    /// Whether `p` lies exactly on the polygon boundary.
    pub fn on_boundary(&self, p: &ExactPoint2) -> bool {
        let n = self.polygon.len();
        (0..n).any(|i| on_segment(&self.polygon[i], &self.polygon[(i + 1) % n], p))
    }
}

pub fn on_segment(a: &ExactPoint2, b: &ExactPoint2, p: &ExactPoint2) -> bool {
    if !orient2d_det(a, b, p).is_zero() {
        return false;
    }
    let d = b.sub(a);
    let t = p.sub(a).dot(&d);
    !t.is_negative() && t <= d.dot(&d)
}

/// Places the boundary loop of `mesh` on the polygon perimeter.
///
/// The loop starts at its smallest vertex index shifted by `rotation_offset`.
/// Corners are assigned monotonically to the loop vertices closest in
/// normalized chord length, then the vertices between two consecutive corners
/// are spread along that polygon edge by their relative chord length.
pub fn map_boundary<P: Position>(
    mesh: &TriMesh<P>,
    spec: &DomainSpec,
    rotation_offset: usize,
) -> Result<BoundaryMap, DomainError> {
    mesh.assert_disk()?;
    let mut lp = mesh.topo.boundary_loops()?.remove(0);
    let n = lp.len();
    let m = spec.polygon.len();
    if n < m {
        return Err(DomainError::TooFewBoundaryVertices { have: n, need: m });
    }
    lp.rotate_left(rotation_offset % n);

    let coords: Vec<[f64; 3]> = lp.iter().map(|&v| mesh.position(v).to_f64_3()).collect();
    let mut s = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for i in 0..n {
        s.push(acc);
        let (a, b) = (coords[i], coords[(i + 1) % n]);
        acc += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    }
    let total = acc;
    for x in &mut s {
        *x /= total;
    }
    s.push(1.0);

    let c = spec.corner_params();
    let mut slots = vec![0usize];
    for (j, &cj) in c.iter().enumerate().skip(1) {
        let lo = slots[j - 1] + 1;
        let hi = n - (m - j);
        let best = (lo..=hi).min_by(|&a, &b| (s[a] - cj).abs().total_cmp(&(s[b] - cj).abs())).expect("non-empty range");
        slots.push(best);
    }

    let mut positions = vec![Point2::new(Rational::zero(), Rational::zero()); n];
    for j in 0..m {
        let (i0, i1) = (slots[j], if j + 1 < m { slots[j + 1] } else { n });
        let (a, b) = (&spec.polygon[j], &spec.polygon[(j + 1) % m]);
        positions[i0] = a.clone();
        let span = s[i1] - s[i0];
        let ts: Vec<f64> = (i0 + 1..i1).map(|i| (s[i] - s[i0]) / span).collect();
        for (k, t) in quantized_params(&ts).into_iter().enumerate() {
            positions[i0 + 1 + k] = a.lerp(b, &t);
        }
    }
    Ok(BoundaryMap { vertices: lp, positions, corner_slots: slots })
}

/// Strictly increasing parameters in `(0, 1)` close to `ts`, using the
/// coarsest dyadic grid that keeps them distinct.
fn quantized_params(ts: &[f64]) -> Vec<Rational> {
    if ts.is_empty() {
        return Vec::new();
    }
    let k = ts.len() as f64;
    let mut bits = 12;
    loop {
        let scale = (2f64).powi(bits);
        let q: Vec<f64> = ts.iter().map(|t| (t * scale).round()).collect();
        let ok = q.first().is_some_and(|&x| x > 0.0)
            && q.last().is_some_and(|&x| x < scale)
            && q.windows(2).all(|w| w[0] < w[1]);
        if ok {
            let den = Rational::from_float(scale).expect("finite");
            return q.iter().map(|&x| Rational::from_float(x).expect("finite") / den.clone()).collect();
        }
        if bits >= 52 {
            // degenerate chord lengths: fall back to uniform spacing
            return (1..=ts.len()).map(|i| Rational::from_ratio(i as i64, k as i64 + 1)).collect();
        }
        bits += 8;
    }
}

impl BoundaryMap {
    /// Target position of every boundary vertex, indexed by vertex id.
    pub fn by_vertex(&self, n_verts: usize) -> Vec<Option<ExactPoint2>> {
        let mut out = vec![None; n_verts];
        for (v, p) in self.vertices.iter().zip(&self.positions) {
            out[*v as usize] = Some(p.clone());
        }
        out
    }

    /// Whether positions advance monotonically along the perimeter.
    pub fn is_monotone(&self, spec: &DomainSpec) -> bool {
        let mut last: Option<(usize, Rational)> = None;
        for p in &self.positions {
            let Some(pos) = perimeter_position(spec, p) else { return false };
            if let Some(prev) = &last {
                if pos <= *prev {
                    return false;
                }
            }
            last = Some(pos);
        }
        true
    }
}

/// (edge index, parameter in `[0, 1)`) of a point on the perimeter.
fn perimeter_position(spec: &DomainSpec, p: &ExactPoint2) -> Option<(usize, Rational)> {
    let m = spec.polygon.len();
    for i in 0..m {
        let (a, b) = (&spec.polygon[i], &spec.polygon[(i + 1) % m]);
        if on_segment(a, b, p) && p != b {
            let d = b.sub(a);
            return Some((i, p.sub(a).dot(&d) / d.dot(&d)));
        }
    }
    None
}

/// Exact check that every position lies on the polygon boundary.
pub fn positions_on_boundary(spec: &DomainSpec, positions: &[ExactPoint2]) -> bool {
    positions.iter().all(|p| spec.on_boundary(p))
}
