//! Indexed triangle meshes with directed-edge adjacency and the three local
//! surgeries (edge split, triangle split, edge flip).
//!
//! Connectivity lives in [`Topology`] and is independent of the embedding;
//! [`TriMesh`] pairs it with per-vertex positions of any [`Position`] type.
//! Triangle indices are stable: surgeries rewrite triangles in place and append
//! new ones, nothing is ever deleted.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use num_traits::{One, Zero};
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::geom::{orient2d, Point2, Point3, Sign};
use crate::scalar::Scalar;

pub type VertId = u32;
pub type TriId = u32;

pub const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("mesh has no triangles")]
    Empty,
    #[error("triangle {tri} references vertex {vertex} out of range")]
    IndexOutOfRange { tri: usize, vertex: u32 },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("edge ({0}, {1}) has more than two incident triangles")]
    NonManifoldEdge(u32, u32),
    #[error("vertex {0} is not manifold")]
    NonManifoldVertex(u32),
    #[error("triangle orientations cannot be made coherent")]
    NotOrientable,
    #[error("mesh is not connected ({0} components)")]
    Disconnected(usize),
    #[error("mesh has {0} boundary loops, a disk has exactly one")]
    BoundaryLoops(usize),
    #[error("Euler characteristic is {0}, a disk has 1")]
    EulerCharacteristic(i64),
    #[error("edge ({0}, {1}) does not exist")]
    NoSuchEdge(u32, u32),
    #[error("edge ({0}, {1}) is on the boundary")]
    BoundaryEdge(u32, u32),
    #[error("flipping ({0}, {1}) would duplicate an existing edge")]
    FlipCreatesDuplicate(u32, u32),
    #[error("quad around edge ({0}, {1}) is not strictly convex")]
    NonConvexQuad(u32, u32),
    #[error("split parameter must lie strictly inside (0, 1)")]
    ParameterOutOfRange,
    #[error("split point is not strictly inside triangle {0}")]
    PointNotInside(u32),
    #[error("vertex {0} cannot be inserted: it is already connected")]
    VertexInUse(u32),
    #[error("mesh has no interior vertex")]
    NoInteriorVertex,
    #[error("inconsistent adjacency: {0}")]
    Corrupt(String),
}

/// Vertex embedding usable by [`TriMesh`].
pub trait Position: Clone {
    type Scalar: Scalar;

    fn lerp(&self, other: &Self, t: &Self::Scalar) -> Self;

    /// Whether `self` lies strictly inside the triangle `(a, b, c)`.
    fn strictly_inside(&self, a: &Self, b: &Self, c: &Self) -> bool;

    /// Orientation in the plane, `None` for non-planar embeddings.
    fn planar_orientation(a: &Self, b: &Self, c: &Self) -> Option<Sign>;

    /// Whether the triangle has zero area.
    fn degenerate(a: &Self, b: &Self, c: &Self) -> bool;

    fn to_f64_3(&self) -> [f64; 3];
}

impl<S: Scalar> Position for Point2<S> {
    type Scalar = S;

    fn lerp(&self, other: &Self, t: &S) -> Self {
        Point2::lerp(self, other, t)
    }

    fn strictly_inside(&self, a: &Self, b: &Self, c: &Self) -> bool {
        let s = orient2d(a, b, c);
        s != Sign::Zero && orient2d(a, b, self) == s && orient2d(b, c, self) == s && orient2d(c, a, self) == s
    }

    fn planar_orientation(a: &Self, b: &Self, c: &Self) -> Option<Sign> {
        Some(orient2d(a, b, c))
    }

    fn degenerate(a: &Self, b: &Self, c: &Self) -> bool {
        orient2d(a, b, c) == Sign::Zero
    }

    fn to_f64_3(&self) -> [f64; 3] {
        let p = self.to_f64();
        [p[0], p[1], 0.0]
    }
}

impl<S: Scalar> Position for Point3<S> {
    type Scalar = S;

    fn lerp(&self, other: &Self, t: &S) -> Self {
        Point3::lerp(self, other, t)
    }

    fn strictly_inside(&self, a: &Self, b: &Self, c: &Self) -> bool {
        let n = b.sub(a).cross(&c.sub(a));
        if n.is_zero() || !self.sub(a).dot(&n).is_zero() {
            return false;
        }
        // barycentric weights share the sign of the normal projection
        let wa = c.sub(b).cross(&self.sub(b)).dot(&n);
        let wb = a.sub(c).cross(&self.sub(c)).dot(&n);
        let wc = b.sub(a).cross(&self.sub(a)).dot(&n);
        wa.is_positive() && wb.is_positive() && wc.is_positive()
    }

    fn planar_orientation(_: &Self, _: &Self, _: &Self) -> Option<Sign> {
        None
    }

    fn degenerate(a: &Self, b: &Self, c: &Self) -> bool {
        b.sub(a).cross(&c.sub(a)).is_zero()
    }

    fn to_f64_3(&self) -> [f64; 3] {
        self.to_f64()
    }
}

/// One connectivity edit, sufficient to replay it on a copy of the mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurgeryRecord {
    EdgeSplit { a: VertId, b: VertId, vertex: VertId, before: Vec<TriId>, after: Vec<TriId> },
    TriangleSplit { tri: TriId, vertex: VertId, after: [TriId; 3] },
    EdgeFlip { a: VertId, b: VertId, tris: [TriId; 2] },
}

#[inline]
fn key(a: u32, b: u32) -> u64 {
    ((a as u64) << 32) | b as u64
}

/// Rotate `t` so that `v` comes first.
#[inline]
pub fn rotate_to(t: [u32; 3], v: u32) -> [u32; 3] {
    if t[0] == v {
        t
    } else if t[1] == v {
        [t[1], t[2], t[0]]
    } else {
        debug_assert_eq!(t[2], v);
        [t[2], t[0], t[1]]
    }
}

/// Pure connectivity of an oriented triangle mesh.
#[derive(Debug, Clone, Default)]
pub struct Topology {
    tris: Vec<[u32; 3]>,
    half: FxHashMap<u64, TriId>,
    boundary: Vec<bool>,
    out_hint: Vec<u32>,
    log: Option<Vec<SurgeryRecord>>,
}

impl Topology {
    /// Builds adjacency from consistently oriented triangles. Orientation is
    /// not repaired here, see [`TriMesh::build`].
    pub fn from_oriented(n_verts: usize, tris: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let mut topo = Topology {
            tris: Vec::with_capacity(tris.len()),
            half: FxHashMap::default(),
            boundary: vec![false; n_verts],
            out_hint: vec![NONE; n_verts],
            log: None,
        };
        topo.half.reserve(tris.len() * 3);
        for (i, t) in tris.into_iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if topo.half.insert(key(a, b), i as TriId).is_some() {
                    return Err(MeshError::NonManifoldEdge(a.min(b), a.max(b)));
                }
                topo.out_hint[a as usize] = b;
            }
            topo.tris.push(t);
        }
        for t in &topo.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if !topo.half.contains_key(&key(b, a)) {
                    topo.boundary[a as usize] = true;
                    topo.boundary[b as usize] = true;
                }
            }
        }
        Ok(topo)
    }

    pub fn enable_log(&mut self) {
        if self.log.is_none() {
            self.log = Some(Vec::new());
        }
    }

    pub fn log(&self) -> &[SurgeryRecord] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn take_log(&mut self) -> Vec<SurgeryRecord> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn num_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.len()
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.tris
    }

    pub fn triangle(&self, t: TriId) -> [u32; 3] {
        self.tris[t as usize]
    }

    /// Triangle containing the directed edge `a -> b`.
    #[inline]
    pub fn tri_of(&self, a: VertId, b: VertId) -> Option<TriId> {
        self.half.get(&key(a, b)).copied()
    }

    pub fn has_edge(&self, a: VertId, b: VertId) -> bool {
        self.half.contains_key(&key(a, b)) || self.half.contains_key(&key(b, a))
    }

    pub fn is_boundary_vertex(&self, v: VertId) -> bool {
        self.boundary[v as usize]
    }

    pub fn is_boundary_edge(&self, a: VertId, b: VertId) -> bool {
        self.half.contains_key(&key(a, b)) != self.half.contains_key(&key(b, a))
    }

    pub fn is_isolated(&self, v: VertId) -> bool {
        self.out_hint[v as usize] == NONE
    }

    /// Reserves a new vertex slot with no incident triangles.
    pub fn add_vertex(&mut self) -> VertId {
        self.boundary.push(false);
        self.out_hint.push(NONE);
        (self.boundary.len() - 1) as VertId
    }

    /// Third vertex of the triangle containing `a -> b`.
    pub fn apex(&self, a: VertId, b: VertId) -> Option<VertId> {
        let t = self.tri_of(a, b)?;
        Some(rotate_to(self.tris[t as usize], a)[2])
    }

    /// Triangles around `v` in counterclockwise order. For boundary vertices
    /// the list starts at the boundary edge leaving `v`.
    pub fn star(&self, v: VertId) -> Vec<TriId> {
        let h = self.out_hint[v as usize];
        if h == NONE {
            return Vec::new();
        }
        let start = self.tri_of(v, h).expect("hint edge exists");
        let mut out = vec![start];
        let mut cur = start;
        loop {
            let y = rotate_to(self.tris[cur as usize], v)[2];
            match self.tri_of(v, y) {
                Some(n) if n == start => return out,
                Some(n) => {
                    out.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        // open fan: walk clockwise from the start to collect the rest
        let mut back = Vec::new();
        cur = start;
        loop {
            let x = rotate_to(self.tris[cur as usize], v)[1];
            match self.tri_of(x, v) {
                Some(n) => {
                    back.push(n);
                    cur = n;
                }
                None => break,
            }
        }
        back.reverse();
        back.extend(out);
        back
    }

    /// Neighbouring vertices of `v` (counterclockwise).
    pub fn neighbors(&self, v: VertId) -> Vec<VertId> {
        let star = self.star(v);
        let mut out: Vec<VertId> = star.iter().map(|&t| rotate_to(self.tris[t as usize], v)[1]).collect();
        if let Some(&last) = star.last() {
            let y = rotate_to(self.tris[last as usize], v)[2];
            if self.tri_of(v, y).is_none() {
                out.push(y);
            }
        }
        out
    }

    pub fn valence(&self, v: VertId) -> usize {
        self.neighbors(v).len()
    }

    /// Splits the edge `{a, b}` by `vertex`, which must be fresh or isolated.
    /// Returns the triangles created (one or two).
    pub fn split_edge(&mut self, a: VertId, b: VertId, vertex: VertId) -> Result<Vec<TriId>, MeshError> {
        let t1 = self.tri_of(a, b);
        let t2 = self.tri_of(b, a);
        if t1.is_none() && t2.is_none() {
            return Err(MeshError::NoSuchEdge(a, b));
        }
        self.claim_vertex(vertex)?;
        let q = vertex;
        let mut before = Vec::new();
        let mut created = Vec::new();
        let mut after = Vec::new();
        self.half.remove(&key(a, b));
        self.half.remove(&key(b, a));
        for (t, u, w) in [(t1, a, b), (t2, b, a)] {
            let Some(t) = t else { continue };
            // t = (u, w, c) -> (u, q, c) + (q, w, c)
            let c = rotate_to(self.tris[t as usize], u)[2];
            let n = self.tris.len() as TriId;
            self.tris[t as usize] = [u, q, c];
            self.tris.push([q, w, c]);
            self.half.insert(key(u, q), t);
            self.half.insert(key(q, c), t);
            self.half.insert(key(c, u), t);
            self.half.insert(key(q, w), n);
            self.half.insert(key(w, c), n);
            self.half.insert(key(c, q), n);
            before.push(t);
            after.push(t);
            after.push(n);
            created.push(n);
        }
        let on_boundary = t1.is_none() || t2.is_none();
        self.boundary[q as usize] = on_boundary;
        for &t in &after {
            let tri = self.tris[t as usize];
            for k in 0..3 {
                self.out_hint[tri[k] as usize] = tri[(k + 1) % 3];
            }
        }
        if let Some(log) = &mut self.log {
            log.push(SurgeryRecord::EdgeSplit { a, b, vertex: q, before, after });
        }
        Ok(created)
    }

    /// Splits triangle `t` into three around `vertex`. Returns the three
    /// children; the first keeps index `t` and the edge `t[0] -> t[1]`.
    pub fn split_triangle(&mut self, t: TriId, vertex: VertId) -> Result<[TriId; 3], MeshError> {
        if t as usize >= self.tris.len() {
            return Err(MeshError::Corrupt(format!("no triangle {t}")));
        }
        self.claim_vertex(vertex)?;
        let p = vertex;
        let [a, b, c] = self.tris[t as usize];
        let n1 = self.tris.len() as TriId;
        let n2 = n1 + 1;
        self.tris[t as usize] = [a, b, p];
        self.tris.push([b, c, p]);
        self.tris.push([c, a, p]);
        self.half.insert(key(a, b), t);
        self.half.insert(key(b, p), t);
        self.half.insert(key(p, a), t);
        self.half.insert(key(b, c), n1);
        self.half.insert(key(c, p), n1);
        self.half.insert(key(p, b), n1);
        self.half.insert(key(c, a), n2);
        self.half.insert(key(a, p), n2);
        self.half.insert(key(p, c), n2);
        self.boundary[p as usize] = false;
        self.out_hint[p as usize] = a;
        if let Some(log) = &mut self.log {
            log.push(SurgeryRecord::TriangleSplit { tri: t, vertex: p, after: [t, n1, n2] });
        }
        Ok([t, n1, n2])
    }

    /// Flips the interior edge `{a, b}`. The triangle that contained `a -> b`
    /// becomes `(c, a, d)` and the other one `(d, b, c)`, where `c` and `d`
    /// are the apexes of `a -> b` and `b -> a`.
    pub fn flip_edge(&mut self, a: VertId, b: VertId) -> Result<[TriId; 2], MeshError> {
        let (t1, t2) = match (self.tri_of(a, b), self.tri_of(b, a)) {
            (Some(t1), Some(t2)) => (t1, t2),
            (None, None) => return Err(MeshError::NoSuchEdge(a, b)),
            _ => return Err(MeshError::BoundaryEdge(a, b)),
        };
        let c = rotate_to(self.tris[t1 as usize], a)[2];
        let d = rotate_to(self.tris[t2 as usize], b)[2];
        if c == d || self.has_edge(c, d) {
            return Err(MeshError::FlipCreatesDuplicate(a, b));
        }
        self.half.remove(&key(a, b));
        self.half.remove(&key(b, a));
        self.tris[t1 as usize] = [c, a, d];
        self.tris[t2 as usize] = [d, b, c];
        self.half.insert(key(c, a), t1);
        self.half.insert(key(a, d), t1);
        self.half.insert(key(d, c), t1);
        self.half.insert(key(d, b), t2);
        self.half.insert(key(b, c), t2);
        self.half.insert(key(c, d), t2);
        self.out_hint[a as usize] = d;
        self.out_hint[b as usize] = c;
        if let Some(log) = &mut self.log {
            log.push(SurgeryRecord::EdgeFlip { a, b, tris: [t1, t2] });
        }
        Ok([t1, t2])
    }

    fn claim_vertex(&mut self, v: VertId) -> Result<(), MeshError> {
        let n = self.num_vertices() as VertId;
        if v == n {
            self.add_vertex();
            Ok(())
        } else if v < n && self.out_hint[v as usize] == NONE {
            Ok(())
        } else {
            Err(MeshError::VertexInUse(v))
        }
    }

    /// Re-applies a recorded surgery.
    pub fn replay(&mut self, rec: &SurgeryRecord) -> Result<(), MeshError> {
        match rec {
            SurgeryRecord::EdgeSplit { a, b, vertex, .. } => self.split_edge(*a, *b, *vertex).map(|_| ()),
            SurgeryRecord::TriangleSplit { tri, vertex, .. } => self.split_triangle(*tri, *vertex).map(|_| ()),
            SurgeryRecord::EdgeFlip { a, b, .. } => self.flip_edge(*a, *b).map(|_| ()),
        }
    }

    /// Directed boundary edges as a successor map (`NONE` for non-boundary
    /// vertices).
    pub fn boundary_successors(&self) -> Vec<u32> {
        let mut next = vec![NONE; self.num_vertices()];
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if !self.half.contains_key(&key(b, a)) {
                    next[a as usize] = b;
                }
            }
        }
        next
    }

    /// All boundary loops, each starting at its smallest vertex index and
    /// oriented like the triangles (interior on the left).
    pub fn boundary_loops(&self) -> Result<Vec<Vec<VertId>>, MeshError> {
        let mut out_count = vec![0u32; self.num_vertices()];
        let mut next = vec![NONE; self.num_vertices()];
        for t in &self.tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if !self.half.contains_key(&key(b, a)) {
                    out_count[a as usize] += 1;
                    next[a as usize] = b;
                }
            }
        }
        if let Some(v) = out_count.iter().position(|&c| c > 1) {
            return Err(MeshError::NonManifoldVertex(v as u32));
        }
        let mut seen = vec![false; self.num_vertices()];
        let mut loops = Vec::new();
        for v in 0..self.num_vertices() {
            if next[v] == NONE || seen[v] {
                continue;
            }
            let mut lp = Vec::new();
            let mut cur = v as u32;
            while !seen[cur as usize] {
                seen[cur as usize] = true;
                lp.push(cur);
                cur = next[cur as usize];
                if cur == NONE {
                    return Err(MeshError::Corrupt("open boundary chain".into()));
                }
            }
            if cur != v as u32 {
                return Err(MeshError::NonManifoldVertex(cur));
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Full audit of the adjacency tables.
    pub fn check(&self) -> Result<(), MeshError> {
        let mut count = 0usize;
        for (i, t) in self.tris.iter().enumerate() {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::RepeatedVertex(i));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                match self.tri_of(a, b) {
                    Some(x) if x as usize == i => count += 1,
                    _ => return Err(MeshError::Corrupt(format!("edge {a}->{b} of triangle {i} not indexed"))),
                }
            }
        }
        if count != self.half.len() {
            return Err(MeshError::Corrupt("stale directed edges".into()));
        }
        for v in 0..self.num_vertices() as u32 {
            let h = self.out_hint[v as usize];
            if h != NONE && self.tri_of(v, h).is_none() {
                return Err(MeshError::Corrupt(format!("stale hint at {v}")));
            }
        }
        Ok(())
    }

    /// Canonical triangle list (each rotated to start at its smallest index,
    /// then sorted) for connectivity comparison.
    pub fn canonical_triangles(&self) -> Vec<[u32; 3]> {
        let mut v: Vec<[u32; 3]> = self
            .tris
            .iter()
            .map(|&t| {
                let m = *t.iter().min().unwrap();
                rotate_to(t, m)
            })
            .collect();
        v.sort_unstable();
        v
    }

    /// Number of vertices referenced by at least one triangle.
    pub fn num_used_vertices(&self) -> usize {
        self.out_hint.iter().filter(|&&h| h != NONE).count()
    }

    pub fn num_edges(&self) -> usize {
        let boundary = self.half.keys().filter(|&&k| !self.half.contains_key(&k.rotate_right(32))).count();
        (self.half.len() - boundary) / 2 + boundary
    }
}

/// Triangle mesh: positions plus connectivity.
#[derive(Debug, Clone)]
pub struct TriMesh<P> {
    pub positions: Vec<P>,
    pub topo: Topology,
}

impl<P: Position> TriMesh<P> {
    /// Builds a mesh, repairing triangle orientations by breadth-first
    /// propagation so that every shared edge is traversed in opposite
    /// directions by its two triangles.
    pub fn build(positions: Vec<P>, tris: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        if tris.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = positions.len();
        for (i, t) in tris.iter().enumerate() {
            for &v in t {
                if v as usize >= n {
                    return Err(MeshError::IndexOutOfRange { tri: i, vertex: v });
                }
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::RepeatedVertex(i));
            }
        }
        let tris = orient_coherently(&tris)?;
        let topo = Topology::from_oriented(n, tris)?;
        Ok(TriMesh { positions, topo })
    }

    /// Wraps already oriented connectivity.
    pub fn from_topology(positions: Vec<P>, topo: Topology) -> Self {
        debug_assert_eq!(positions.len(), topo.num_vertices());
        TriMesh { positions, topo }
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.topo.num_triangles()
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        self.topo.triangles()
    }

    pub fn position(&self, v: VertId) -> &P {
        &self.positions[v as usize]
    }

    pub fn corners(&self, t: TriId) -> [&P; 3] {
        let [a, b, c] = self.topo.triangle(t);
        [&self.positions[a as usize], &self.positions[b as usize], &self.positions[c as usize]]
    }

    /// Connected, a single boundary loop, Euler characteristic 1, and every
    /// vertex a proper fan.
    pub fn assert_disk(&self) -> Result<(), MeshError> {
        assert_disk(&self.topo)
    }

    /// Splits the edge `{a, b}` at `a + t (b - a)`. Returns the new vertex.
    pub fn split_edge(&mut self, a: VertId, b: VertId, t: &P::Scalar) -> Result<VertId, MeshError> {
        if !(t > &P::Scalar::zero() && t < &P::Scalar::one()) {
            return Err(MeshError::ParameterOutOfRange);
        }
        let p = self.positions[a as usize].lerp(&self.positions[b as usize], t);
        let v = self.positions.len() as VertId;
        self.topo.split_edge(a, b, v)?;
        self.positions.push(p);
        Ok(v)
    }

    /// Splits triangle `t` at a strictly interior point. Returns the new
    /// vertex.
    pub fn split_triangle(&mut self, t: TriId, p: P) -> Result<VertId, MeshError> {
        let v = self.positions.len() as VertId;
        self.check_inside(t, &p)?;
        self.topo.split_triangle(t, v)?;
        self.positions.push(p);
        Ok(v)
    }

    /// Like [`split_triangle`](Self::split_triangle) but places an existing
    /// isolated vertex.
    pub fn split_triangle_with(&mut self, t: TriId, v: VertId, p: P) -> Result<[TriId; 3], MeshError> {
        self.check_inside(t, &p)?;
        let out = self.topo.split_triangle(t, v)?;
        self.positions[v as usize] = p;
        Ok(out)
    }

    fn check_inside(&self, t: TriId, p: &P) -> Result<(), MeshError> {
        if t as usize >= self.num_triangles() {
            return Err(MeshError::Corrupt(format!("no triangle {t}")));
        }
        let [a, b, c] = self.corners(t);
        if !p.strictly_inside(a, b, c) {
            return Err(MeshError::PointNotInside(t));
        }
        Ok(())
    }

    /// Flips the interior edge `{a, b}`. With `strict`, planar meshes require
    /// the surrounding quad to be strictly convex.
    pub fn flip_edge(&mut self, a: VertId, b: VertId, strict: bool) -> Result<[TriId; 2], MeshError> {
        if strict {
            let (c, d) = match (self.topo.apex(a, b), self.topo.apex(b, a)) {
                (Some(c), Some(d)) => (c, d),
                (None, None) => return Err(MeshError::NoSuchEdge(a, b)),
                _ => return Err(MeshError::BoundaryEdge(a, b)),
            };
            let pos = |v: VertId| &self.positions[v as usize];
            // quad a, d, b, c in counterclockwise order
            let turns = [
                P::planar_orientation(pos(a), pos(d), pos(b)),
                P::planar_orientation(pos(d), pos(b), pos(c)),
                P::planar_orientation(pos(b), pos(c), pos(a)),
                P::planar_orientation(pos(c), pos(a), pos(d)),
            ];
            if turns.iter().any(|s| matches!(s, Some(s) if *s != Sign::Positive)) {
                return Err(MeshError::NonConvexQuad(a, b));
            }
        }
        self.topo.flip_edge(a, b)
    }

    /// Interior vertex furthest from the boundary in graph distance with
    /// Euclidean edge weights (multi-source Dijkstra from all boundary
    /// vertices). Ties go to the smallest index.
    pub fn farthest_interior_vertex(&self) -> Result<VertId, MeshError> {
        let dist = boundary_distances(self);
        let mut best: Option<(f64, VertId)> = None;
        for v in 0..self.num_vertices() as VertId {
            if self.topo.is_boundary_vertex(v) || self.topo.is_isolated(v) {
                continue;
            }
            let d = dist[v as usize];
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v).ok_or(MeshError::NoInteriorVertex)
    }

    /// Same vertex count and the same triangles up to cyclic rotation.
    pub fn connectivity_equal<Q: Position>(&self, other: &TriMesh<Q>) -> bool {
        connectivity_equal(&self.topo, &other.topo)
    }
}

pub fn connectivity_equal(a: &Topology, b: &Topology) -> bool {
    a.num_vertices() == b.num_vertices()
        && a.num_triangles() == b.num_triangles()
        && a.canonical_triangles() == b.canonical_triangles()
}

pub fn assert_disk(topo: &Topology) -> Result<(), MeshError> {
    if topo.num_triangles() == 0 {
        return Err(MeshError::Empty);
    }
    let comps = triangle_components(topo);
    if comps != 1 {
        return Err(MeshError::Disconnected(comps));
    }
    let loops = topo.boundary_loops()?;
    if loops.len() != 1 {
        return Err(MeshError::BoundaryLoops(loops.len()));
    }
    let v = topo.num_used_vertices() as i64;
    let e = topo.num_edges() as i64;
    let f = topo.num_triangles() as i64;
    if v - e + f != 1 {
        return Err(MeshError::EulerCharacteristic(v - e + f));
    }
    // every vertex must be a single fan
    let mut incident = vec![0usize; topo.num_vertices()];
    for t in topo.triangles() {
        for &v in t {
            incident[v as usize] += 1;
        }
    }
    for (v, &n) in incident.iter().enumerate() {
        if n > 0 && topo.star(v as VertId).len() != n {
            return Err(MeshError::NonManifoldVertex(v as VertId));
        }
    }
    Ok(())
}

fn triangle_components(topo: &Topology) -> usize {
    let n = topo.num_triangles();
    let mut seen = vec![false; n];
    let mut comps = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        comps += 1;
        seen[s] = true;
        let mut queue = VecDeque::from([s as TriId]);
        while let Some(t) = queue.pop_front() {
            let tri = topo.triangle(t);
            for k in 0..3 {
                if let Some(o) = topo.tri_of(tri[(k + 1) % 3], tri[k]) {
                    if !seen[o as usize] {
                        seen[o as usize] = true;
                        queue.push_back(o);
                    }
                }
            }
        }
    }
    comps
}

/// Orients triangles coherently per connected component, keeping the first
/// triangle of each component as given.
fn orient_coherently(tris: &[[u32; 3]]) -> Result<Vec<[u32; 3]>, MeshError> {
    let mut edge_tris: FxHashMap<u64, Vec<usize>> = FxHashMap::default();
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let list = edge_tris.entry(key(a.min(b), a.max(b))).or_default();
            list.push(i);
            if list.len() > 2 {
                return Err(MeshError::NonManifoldEdge(a.min(b), a.max(b)));
            }
        }
    }
    let mut out = tris.to_vec();
    let mut state = vec![0u8; tris.len()]; // 0 unvisited, 1 fixed
    for s in 0..tris.len() {
        if state[s] != 0 {
            continue;
        }
        state[s] = 1;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            let t = out[i];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                for &j in &edge_tris[&key(a.min(b), a.max(b))] {
                    if j == i {
                        continue;
                    }
                    let u = out[j];
                    // consistent iff j traverses b -> a
                    let same_dir = (0..3).any(|m| u[m] == a && u[(m + 1) % 3] == b);
                    if state[j] == 0 {
                        if same_dir {
                            out[j] = [u[0], u[2], u[1]];
                        }
                        state[j] = 1;
                        queue.push_back(j);
                    } else if same_dir {
                        return Err(MeshError::NotOrientable);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(PartialEq)]
struct HeapItem(f64, VertId);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // min-heap on distance, then on index
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Multi-source Dijkstra distances from the boundary.
pub fn boundary_distances<P: Position>(mesh: &TriMesh<P>) -> Vec<f64> {
    let n = mesh.num_vertices();
    let coords: Vec<[f64; 3]> = mesh.positions.iter().map(|p| p.to_f64_3()).collect();
    let mut adj: Vec<Vec<VertId>> = vec![Vec::new(); n];
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            // each undirected edge once: from the a->b side, or b->a if boundary
            if a < b || mesh.topo.tri_of(b, a).is_none() {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for v in 0..n as VertId {
        if mesh.topo.is_boundary_vertex(v) {
            dist[v as usize] = 0.0;
            heap.push(HeapItem(0.0, v));
        }
    }
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for &w in &adj[v as usize] {
            let (p, q) = (coords[v as usize], coords[w as usize]);
            let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            let nd = d + len;
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(HeapItem(nd, w));
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{ept, orient2d};
    use crate::scalar::ratio;
    use crate::{ExactPoint2, Rational};
    use proptest::prelude::*;

    fn pts(c: &[(f64, f64)]) -> Vec<ExactPoint2> {
        c.iter().map(|&(x, y)| ept(x, y)).collect()
    }

    fn square() -> TriMesh<ExactPoint2> {
        TriMesh::build(pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]), vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    fn fan(k: usize) -> TriMesh<ExactPoint2> {
        let mut p = vec![(0.0, 0.0)];
        for i in 0..k {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            p.push((a.cos(), a.sin()));
        }
        let tris = (0..k as u32).map(|i| [0, 1 + i, 1 + (i + 1) % k as u32]).collect();
        TriMesh::build(pts(&p), tris).unwrap()
    }

    fn all_positive(m: &TriMesh<ExactPoint2>) -> bool {
        (0..m.num_triangles() as u32).all(|t| {
            let [a, b, c] = m.corners(t);
            orient2d(a, b, c) == Sign::Positive
        })
    }

    #[test]
    fn build_single_triangle() {
        let m = TriMesh::build(pts(&[(0., 0.), (1., 0.), (0., 1.)]), vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.topo.num_edges(), 3);
        assert_eq!(m.topo.boundary_loops().unwrap().len(), 1);
        assert!(m.assert_disk().is_ok());
    }

    #[test]
    fn build_two_triangles() {
        let m = square();
        let interior = (0..4u32)
            .flat_map(|a| (0..4u32).map(move |b| (a, b)))
            .filter(|&(a, b)| a < b && m.topo.has_edge(a, b) && !m.topo.is_boundary_edge(a, b))
            .count();
        assert_eq!(interior, 1);
        assert_eq!(m.topo.num_edges(), 5);
        assert_eq!(m.topo.boundary_loops().unwrap()[0].len(), 4);
    }

    #[test]
    fn build_rejects_non_manifold_edge() {
        let p = pts(&[(0., 0.), (1., 0.), (0., 1.), (0., -1.), (1., 1.)]);
        let err = TriMesh::build(p, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge(0, 1)));
    }

    #[test]
    fn build_repairs_orientation() {
        let p = pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]);
        let m = TriMesh::build(p, vec![[0, 1, 2], [0, 3, 2]]).unwrap();
        assert!(all_positive(&m));
        m.topo.check().unwrap();
    }

    #[test]
    fn build_rejects_empty_and_bad_indices() {
        assert_eq!(TriMesh::<ExactPoint2>::build(vec![], vec![]).unwrap_err(), MeshError::Empty);
        let p = pts(&[(0., 0.), (1., 0.), (0., 1.)]);
        assert!(matches!(TriMesh::build(p.clone(), vec![[0, 1, 5]]).unwrap_err(), MeshError::IndexOutOfRange { .. }));
        assert_eq!(TriMesh::build(p, vec![[0, 1, 1]]).unwrap_err(), MeshError::RepeatedVertex(0));
    }

    #[test]
    fn disk_checks() {
        assert!(fan(5).assert_disk().is_ok());

        // annulus: 4 outer, 4 inner
        let mut p = Vec::new();
        for i in 0..4 {
            let a = std::f64::consts::FRAC_PI_2 * i as f64;
            p.push((2.0 * a.cos(), 2.0 * a.sin()));
        }
        for i in 0..4 {
            let a = std::f64::consts::FRAC_PI_2 * i as f64;
            p.push((a.cos(), a.sin()));
        }
        let mut tris = Vec::new();
        for i in 0..4u32 {
            let j = (i + 1) % 4;
            tris.push([i, j, 4 + j]);
            tris.push([i, 4 + j, 4 + i]);
        }
        let ann = TriMesh::build(pts(&p), tris).unwrap();
        assert_eq!(ann.assert_disk(), Err(MeshError::BoundaryLoops(2)));

        let two = TriMesh::build(
            pts(&[(0., 0.), (1., 0.), (0., 1.), (5., 0.), (6., 0.), (5., 1.)]),
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_eq!(two.assert_disk(), Err(MeshError::Disconnected(2)));
    }

    #[test]
    fn split_interior_edge() {
        let mut m = square();
        let v = m.split_edge(0, 2, &ratio(1, 2)).unwrap();
        assert_eq!(v, 4);
        assert_eq!(m.num_triangles(), 4);
        assert_eq!(m.num_vertices(), 5);
        assert!(!m.topo.is_boundary_vertex(v));
        assert!(all_positive(&m));
        m.topo.check().unwrap();
    }

    #[test]
    fn split_boundary_edge() {
        let mut m = square();
        let v = m.split_edge(0, 1, &ratio(1, 2)).unwrap();
        assert_eq!(m.num_triangles(), 3);
        assert!(m.topo.is_boundary_vertex(v));
        assert_eq!(m.topo.boundary_loops().unwrap()[0].len(), 5);
        assert!(m.assert_disk().is_ok());
    }

    #[test]
    fn split_equilateral_at_quarter() {
        let s3 = 3f64.sqrt() / 2.0;
        let mut m = TriMesh::build(pts(&[(0., 0.), (1., 0.), (0.5, s3)]), vec![[0, 1, 2]]).unwrap();
        m.split_edge(0, 1, &ratio(1, 4)).unwrap();
        // child determinants: (1/4)*s3 and (3/4)*s3 times the parent's sign
        let parent = crate::geom::orient2d_det(&ept(0., 0.), &ept(1., 0.), &ept(0.5, s3));
        let dets: Vec<Rational> = (0..2u32)
            .map(|t| {
                let [a, b, c] = m.corners(t);
                crate::geom::orient2d_det(a, b, c)
            })
            .collect();
        let mut sorted = dets.clone();
        sorted.sort();
        assert_eq!(sorted, vec![parent.clone() * ratio(1, 4), parent * ratio(3, 4)]);
    }

    #[test]
    fn split_parameter_must_be_interior() {
        let mut m = square();
        assert_eq!(m.split_edge(0, 1, &ratio(0, 1)), Err(MeshError::ParameterOutOfRange));
        assert_eq!(m.split_edge(0, 1, &ratio(1, 1)), Err(MeshError::ParameterOutOfRange));
    }

    #[test]
    fn split_triangle_examples() {
        let mut m = TriMesh::build(pts(&[(0., 0.), (1., 0.), (0., 1.)]), vec![[0, 1, 2]]).unwrap();
        m.split_triangle(0, ept(0.25, 0.25)).unwrap();
        assert_eq!(m.num_triangles(), 3);
        assert!(all_positive(&m));

        let mut m = TriMesh::build(pts(&[(0., 0.), (1., 0.), (0., 1.)]), vec![[0, 1, 2]]).unwrap();
        let g = ExactPoint2::new(ratio(1, 3), ratio(1, 3));
        m.split_triangle(0, g).unwrap();
        let areas: Vec<Rational> = (0..3u32)
            .map(|t| {
                let [a, b, c] = m.corners(t);
                crate::geom::orient2d_det(a, b, c)
            })
            .collect();
        assert!(areas.iter().all(|a| *a == ratio(1, 3)));
        assert_eq!(areas.iter().cloned().sum::<Rational>(), ratio(1, 1));

        let mut m = TriMesh::build(pts(&[(0., 0.), (1., 0.), (0., 1.)]), vec![[0, 1, 2]]).unwrap();
        assert_eq!(m.split_triangle(0, ept(0., 0.)), Err(MeshError::PointNotInside(0)));
    }

    #[test]
    fn flip_examples() {
        let mut m = square();
        m.flip_edge(0, 2, true).unwrap();
        assert!(m.topo.has_edge(1, 3));
        assert!(!m.topo.has_edge(0, 2));
        assert!(all_positive(&m));

        let dart = pts(&[(0., 0.), (4., 0.), (2., 1.), (2., 4.)]);
        let mut d = TriMesh::build(dart, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(d.flip_edge(0, 2, true), Err(MeshError::NonConvexQuad(0, 2)));
        assert_eq!(d.flip_edge(0, 1, true), Err(MeshError::BoundaryEdge(0, 1)));

        let orig = square();
        let mut m = square();
        m.flip_edge(0, 2, false).unwrap();
        m.flip_edge(1, 3, false).unwrap();
        assert!(m.connectivity_equal(&orig));
    }

    #[test]
    fn farthest_vertex_of_fan() {
        assert_eq!(fan(6).farthest_interior_vertex().unwrap(), 0);
        assert_eq!(square().farthest_interior_vertex(), Err(MeshError::NoInteriorVertex));
    }

    #[test]
    fn connectivity_comparisons() {
        let a = square();
        assert!(a.connectivity_equal(&a));
        let mut b = square();
        b.flip_edge(0, 2, false).unwrap();
        assert!(!a.connectivity_equal(&b));
        let mut c = square();
        c.positions[2] = ept(3., 3.);
        assert!(a.connectivity_equal(&c));
    }

    #[test]
    fn star_walks_boundary_and_interior() {
        let m = fan(6);
        assert_eq!(m.topo.star(0).len(), 6);
        assert_eq!(m.topo.valence(0), 6);
        assert_eq!(m.topo.star(1).len(), 2);
        assert_eq!(m.topo.valence(1), 3);
    }

    /// Grid disk with `n x n` cells, two triangles per cell.
    pub(crate) fn grid(n: u32) -> TriMesh<ExactPoint2> {
        let mut p = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                p.push(ept(i as f64, j as f64));
            }
        }
        let id = |i: u32, j: u32| j * (n + 1) + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriMesh::build(p, t).unwrap()
    }

    /// Exhaustive oracle: Floyd-Warshall on the edge graph.
    fn farthest_oracle(m: &TriMesh<ExactPoint2>) -> (f64, Vec<u32>) {
        let n = m.num_vertices();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0.0;
        }
        for t in m.triangles() {
            for k in 0..3 {
                let (a, b) = (t[k] as usize, t[(k + 1) % 3] as usize);
                let (p, q) = (m.positions[a].to_f64(), m.positions[b].to_f64());
                let l = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                d[a][b] = d[a][b].min(l);
                d[b][a] = d[b][a].min(l);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        let boundary: Vec<usize> = (0..n).filter(|&v| m.topo.is_boundary_vertex(v as u32)).collect();
        let bd: Vec<f64> = (0..n).map(|v| boundary.iter().map(|&b| d[v][b]).fold(f64::INFINITY, f64::min)).collect();
        let max = (0..n).filter(|&v| !m.topo.is_boundary_vertex(v as u32)).map(|v| bd[v]).fold(0.0, f64::max);
        let arg = (0..n)
            .filter(|&v| !m.topo.is_boundary_vertex(v as u32) && (bd[v] - max).abs() < 1e-12)
            .map(|v| v as u32)
            .collect();
        (max, arg)
    }

    #[test]
    fn farthest_vertex_grid_matches_oracle() {
        let m = grid(6);
        let (_, arg) = farthest_oracle(&m);
        let v = m.farthest_interior_vertex().unwrap();
        assert!(arg.contains(&v));
        // the 6x6 grid has a unique center (3,3)
        assert_eq!(v, 3 * 7 + 3);
    }

    #[test]
    fn farthest_vertex_sliver_matches_oracle() {
        // 1 x 8 strip refined through its middle line
        let mut p = Vec::new();
        for i in 0..=8 {
            p.push(ept(i as f64, 0.0));
            p.push(ept(i as f64, 2.0));
        }
        let n0 = p.len() as u32;
        for i in 0..8 {
            p.push(ept(i as f64 + 0.5, 1.0));
        }
        let mut t = Vec::new();
        for i in 0..8u32 {
            let (a, b, c, d, m) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1, n0 + i);
            t.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
        }
        let m = TriMesh::build(p, t).unwrap();
        let (max, arg) = farthest_oracle(&m);
        let v = m.farthest_interior_vertex().unwrap();
        assert!(arg.contains(&v), "{v} not in {arg:?} (max {max})");
        assert_eq!(v, *arg.iter().min().unwrap());
    }

    fn random_disk(seed: u64) -> TriMesh<ExactPoint2> {
        // perturbed grid with random diagonals
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 8) as u32;
        let mut p = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let jitter =
                    |r: &mut rand_chacha::ChaCha8Rng, on_b: bool| if on_b { 0.0 } else { r.random_range(-0.15..0.15) };
                let b = i == 0 || j == 0 || i == n || j == n;
                p.push(ept(i as f64 + jitter(&mut rng, b), j as f64 + jitter(&mut rng, b)));
            }
        }
        let id = |i: u32, j: u32| j * (n + 1) + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if rng.random::<bool>() {
                    t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                    t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                } else {
                    t.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                    t.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                }
            }
        }
        TriMesh::build(p, t).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn farthest_vertex_agrees_with_oracle(seed in 0u64..10_000) {
            let m = random_disk(seed);
            let (_, arg) = farthest_oracle(&m);
            let v = m.farthest_interior_vertex().unwrap();
            prop_assert!(arg.contains(&v));
        }

        #[test]
        fn surgeries_keep_positivity_and_replay(seed in 0u64..10_000, ops in proptest::collection::vec((0u8..3, 0usize..1000, 1i64..8), 1..40)) {
            let mut m = random_disk(seed);
            let start = m.topo.clone();
            m.topo.enable_log();
            for (kind, pick, num) in ops {
                let t = (pick % m.num_triangles()) as u32;
                let [a, b, c] = m.topo.triangle(t);
                match kind {
                    0 => { m.split_edge(a, b, &ratio(num, 8)).unwrap(); }
                    1 => {
                        let [pa, pb, pc] = m.corners(t);
                        let w = [ratio(num, 20), ratio(1, 4), ratio(1, 1) - ratio(num, 20) - ratio(1, 4)];
                        let q = crate::geom::affine_combination(&[pa.clone(), pb.clone(), pc.clone()], &w).unwrap();
                        m.split_triangle(t, q).unwrap();
                    }
                    _ => {
                        let _ = m.flip_edge(b, c, true);
                    }
                }
                prop_assert!(all_positive(&m));
                m.topo.check().unwrap();
            }
            prop_assert!(m.assert_disk().is_ok());
            let mut replay = start;
            for rec in m.topo.log() {
                replay.replay(rec).unwrap();
            }
            prop_assert!(connectivity_equal(&replay, &m.topo));
        }
    }
}
