//! The advancing-front mapping engine.
//!
//! Two meshes are advanced in lockstep: `m1` is the (refined) source mesh and
//! `m2` its image in the target polygon. Vertex `i` of `m1` corresponds to
//! vertex `i` of `m2`. Between the front and the domain boundary `m2` holds the
//! images of the visited `m1` triangles; inside the front it is a fan of one
//! triangle per front edge around the origin `O`.

mod handlers;
mod moves;
mod preprocess;
pub mod scenarios;
mod snap;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::domain::{map_boundary, BoundaryMap, DomainError, DomainSpec};
use crate::geom::{exact_f64, orient2d, orient2d_f64, GeomError, Point2, Sign};
use crate::mesh::{rotate_to, MeshError, Topology, TriId, TriMesh, VertId, NONE};
use crate::scalar::Scalar;
use crate::{ExactPoint2, ExactPoint3, Rational};

pub use preprocess::{preprocess_refine, PreprocessReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfmError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("advancing move {index} took {elapsed:?}")]
    Timeout { index: u64, elapsed: Duration },
    #[error("no progress with {unvisited} triangles left and a front of {front} edges")]
    Livelock { unvisited: usize, front: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn invariant<T>(msg: impl Into<String>) -> Result<T, AfmError> {
    Err(AfmError::Invariant(msg.into()))
}

#[derive(Debug, Clone)]
pub struct AfmConfig {
    /// Barycentric weights of the split placement on `(Φa, Φb, O)`.
    pub split_weights: [Rational; 3],
    /// Convexification moves a vertex to `lift * p + (1 - lift) * O`.
    pub lift: Rational,
    pub move_timeout: Option<Duration>,
    /// Round every new vertex to binary64 when no orientation changes.
    pub snap_round: bool,
    /// Full invariant audit every this many moves.
    pub audit_every: Option<u64>,
    /// Record a front snapshot every this many moves.
    pub trace_every: Option<u64>,
}

impl Default for AfmConfig {
    fn default() -> Self {
        AfmConfig {
            split_weights: [Rational::from_ratio(99, 200), Rational::from_ratio(99, 200), Rational::from_ratio(2, 200)],
            lift: Rational::from_ratio(99, 100),
            move_timeout: None,
            snap_round: true,
            audit_every: None,
            trace_every: None,
        }
    }
}

impl AfmConfig {
    pub fn validate(&self) -> Result<(), AfmError> {
        if self.split_weights.iter().any(|w| !w.is_positive()) {
            return Err(AfmError::Config("split weights must be positive".into()));
        }
        let sum: Rational = self.split_weights.iter().cloned().sum();
        if !sum.is_one() {
            return Err(AfmError::Config("split weights must sum to 1".into()));
        }
        if !(self.lift.is_positive() && self.lift < Rational::one()) {
            return Err(AfmError::Config("lift factor must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Event counters of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Events {
    pub triangle_splits: u64,
    pub edge_flips: u64,
    pub convexifications: u64,
    /// Convexifications that needed at least one refinement split.
    pub refined_convexifications: u64,
    pub concavifications: u64,
    /// Concavifications placed without the constraints of the third move.
    pub concavify_fallbacks: u64,
    pub preprocess_edge_splits: u64,
    pub preprocess_triangle_splits: u64,
    pub refine_edge_splits: u64,
    /// Refinement vertices that are interior in the source mesh.
    pub refine_interior_vertices: u64,
    pub refine_max_splits: u64,
    /// Refinement calls whose split count exceeded the vertex valence.
    pub refine_bound_violations: u64,
    pub concavify_edge_splits: u64,
    pub reseeds: u64,
    pub snap_attempts: u64,
    pub snap_rounded: u64,
    pub skipped: u64,
}

impl Events {
    pub fn moves(&self) -> u64 {
        self.triangle_splits + self.edge_flips
    }

    pub fn refinement_edge_splits(&self) -> u64 {
        self.preprocess_edge_splits + self.refine_edge_splits + self.concavify_edge_splits
    }
}

/// Front polyline recorded during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFrame {
    pub moves: u64,
    pub front: Vec<[f64; 2]>,
}

/// Point with an optional exact binary64 shadow used for fast predicates.
#[derive(Clone, Copy)]
pub(crate) struct Pt<'a> {
    pub e: &'a ExactPoint2,
    pub f: Option<[f64; 2]>,
}

impl<'a> Pt<'a> {
    pub fn new(e: &'a ExactPoint2) -> Self {
        Pt { e, f: exact_f64(e) }
    }
}

pub(crate) fn orient(a: Pt, b: Pt, c: Pt) -> Sign {
    match (a.f, b.f, c.f) {
        (Some(x), Some(y), Some(z)) => orient2d_f64(x, y, z),
        _ => orient2d(a.e, b.e, c.e),
    }
}

/// Paired meshes, front and bookkeeping of one mapping run.
#[derive(Debug, Clone)]
pub struct MapState {
    pub(crate) m1: TriMesh<ExactPoint3>,
    pub(crate) m2: TriMesh<ExactPoint2>,
    /// Binary64 value of each `m2` position when it is exactly representable.
    pub(crate) fast: Vec<Option<[f64; 2]>>,
    pub(crate) origin: VertId,
    pub(crate) front_next: Vec<u32>,
    pub(crate) front_prev: Vec<u32>,
    pub(crate) front_len: usize,
    pub(crate) visited: Vec<bool>,
    pub(crate) unvisited: usize,
    pub(crate) queue: VecDeque<(VertId, VertId)>,
    pub(crate) events: Events,
    pub(crate) config: AfmConfig,
    pub(crate) m1_planar: bool,
    pub(crate) m2_dirty: Vec<VertId>,
    pub(crate) m1_dirty: Vec<VertId>,
    /// Vertices inserted by concavification are kept at their exact place.
    pub(crate) pinned: Vec<VertId>,
    pub(crate) trace: Vec<TraceFrame>,
    pub(crate) input_triangles: usize,
    pub(crate) converged: bool,
    /// A move happened since the queue was last re-seeded.
    pub(crate) progress: bool,
}

impl MapState {
    /// Builds the polar target mesh: every boundary edge of `m1` is fanned
    /// to the image of the farthest interior vertex, placed on the kernel
    /// point.
    pub fn init(
        m1: TriMesh<ExactPoint3>,
        spec: &DomainSpec,
        bmap: &BoundaryMap,
        config: AfmConfig,
    ) -> Result<Self, AfmError> {
        config.validate()?;
        let origin = m1.farthest_interior_vertex()?;
        let n = m1.num_vertices();
        let lp = &bmap.vertices;
        if lp.len() < 3 {
            return invariant("boundary loop shorter than 3");
        }
        let mut positions = vec![Point2::new(Rational::zero(), Rational::zero()); n];
        let mut fans = Vec::with_capacity(lp.len());
        for (i, (&v, p)) in lp.iter().zip(&bmap.positions).enumerate() {
            let w = lp[(i + 1) % lp.len()];
            if m1.topo.tri_of(v, w).is_none() {
                return invariant("boundary map does not follow the boundary loop");
            }
            positions[v as usize] = p.clone();
            fans.push([v, w, origin]);
        }
        positions[origin as usize] = spec.kernel.clone();
        let fast = positions.iter().map(exact_f64).collect();
        let topo = Topology::from_oriented(n, fans)?;
        let m2 = TriMesh::from_topology(positions, topo);

        let mut front_next = vec![NONE; n];
        let mut front_prev = vec![NONE; n];
        for (i, &v) in lp.iter().enumerate() {
            let w = lp[(i + 1) % lp.len()];
            front_next[v as usize] = w;
            front_prev[w as usize] = v;
        }
        let m1_planar = m1.positions.iter().all(|p| p.z.is_zero());
        let nt = m1.num_triangles();
        let mut state = MapState {
            m1,
            m2,
            fast,
            origin,
            front_next,
            front_prev,
            front_len: lp.len(),
            visited: vec![false; nt],
            unvisited: nt,
            queue: lp.iter().enumerate().map(|(i, &v)| (v, lp[(i + 1) % lp.len()])).collect(),
            events: Events::default(),
            config,
            m1_planar,
            m2_dirty: Vec::new(),
            m1_dirty: Vec::new(),
            pinned: Vec::new(),
            trace: Vec::new(),
            input_triangles: nt,
            converged: false,
            progress: true,
        };
        for t in 0..state.m2.num_triangles() as TriId {
            let [a, b, c] = state.m2.topo.triangle(t);
            if state.orient_v(a, b, c) != Sign::Positive {
                return invariant(format!("fan triangle ({a}, {b}, {c}) is not positive"));
            }
        }
        state.record_trace();
        Ok(state)
    }

    /// Assembles a state from explicit meshes and a visited set; the front is
    /// the boundary of the unvisited region. Intended for tests that need a
    /// particular mid-run configuration.
    pub fn from_parts(
        m1: TriMesh<ExactPoint3>,
        m2: TriMesh<ExactPoint2>,
        origin: VertId,
        visited: Vec<bool>,
        config: AfmConfig,
    ) -> Result<Self, AfmError> {
        config.validate()?;
        let n = m1.num_vertices();
        if m2.num_vertices() != n || visited.len() != m1.num_triangles() {
            return invariant("mismatched part sizes");
        }
        let mut front_next = vec![NONE; n];
        let mut front_prev = vec![NONE; n];
        let mut front_len = 0;
        let mut start = NONE;
        for (t, tri) in m1.triangles().iter().enumerate() {
            if visited[t] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let outside = m1.topo.tri_of(b, a).is_none_or(|o| visited[o as usize]);
                if outside {
                    if front_next[a as usize] != NONE {
                        return invariant("front is not a simple cycle");
                    }
                    front_next[a as usize] = b;
                    front_prev[b as usize] = a;
                    front_len += 1;
                    start = a;
                }
            }
        }
        if start == NONE {
            return invariant("no unvisited region");
        }
        let mut queue = VecDeque::new();
        let mut cur = start;
        for _ in 0..front_len {
            let nx = front_next[cur as usize];
            queue.push_back((cur, nx));
            cur = nx;
        }
        if cur != start {
            return invariant("front is not a single cycle");
        }
        let fast = m2.positions.iter().map(exact_f64).collect();
        let unvisited = visited.iter().filter(|&&v| !v).count();
        let m1_planar = m1.positions.iter().all(|p| p.z.is_zero());
        let input_triangles = m1.num_triangles();
        let state = MapState {
            m1,
            m2,
            fast,
            origin,
            front_next,
            front_prev,
            front_len,
            visited,
            unvisited,
            queue,
            events: Events::default(),
            config,
            m1_planar,
            m2_dirty: Vec::new(),
            m1_dirty: Vec::new(),
            pinned: Vec::new(),
            trace: Vec::new(),
            input_triangles,
            converged: false,
            progress: true,
        };
        state.audit()?;
        Ok(state)
    }

    pub fn source(&self) -> &TriMesh<ExactPoint3> {
        &self.m1
    }

    pub fn target(&self) -> &TriMesh<ExactPoint2> {
        &self.m2
    }

    pub fn origin(&self) -> VertId {
        self.origin
    }

    pub fn events(&self) -> &Events {
        &self.events
    }

    pub fn config(&self) -> &AfmConfig {
        &self.config
    }

    pub fn trace(&self) -> &[TraceFrame] {
        &self.trace
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn input_triangles(&self) -> usize {
        self.input_triangles
    }

    pub(crate) fn set_input_triangles(&mut self, n: usize) {
        self.input_triangles = n;
    }

    pub fn visited_count(&self) -> usize {
        self.visited.len() - self.unvisited
    }

    pub fn is_visited(&self, t: TriId) -> bool {
        self.visited[t as usize]
    }

    /// Front vertices in order, starting anywhere.
    pub fn front(&self) -> Vec<VertId> {
        let Some(start) = self.front_next.iter().position(|&x| x != NONE) else { return Vec::new() };
        let mut out = Vec::with_capacity(self.front_len);
        let mut cur = start as VertId;
        loop {
            out.push(cur);
            cur = self.front_next[cur as usize];
            if cur == start as VertId || out.len() > self.front_len {
                break;
            }
        }
        out
    }

    pub fn front_len(&self) -> usize {
        self.front_len
    }

    pub fn front_next(&self, v: VertId) -> Option<VertId> {
        let n = self.front_next[v as usize];
        (n != NONE).then_some(n)
    }

    pub fn front_prev(&self, v: VertId) -> Option<VertId> {
        let n = self.front_prev[v as usize];
        (n != NONE).then_some(n)
    }

    #[inline]
    pub(crate) fn in_front(&self, v: VertId) -> bool {
        self.front_next[v as usize] != NONE
    }

    #[inline]
    pub(crate) fn pt(&self, v: VertId) -> Pt<'_> {
        Pt { e: &self.m2.positions[v as usize], f: self.fast[v as usize] }
    }

    #[inline]
    pub(crate) fn orient_v(&self, a: VertId, b: VertId, c: VertId) -> Sign {
        orient(self.pt(a), self.pt(b), self.pt(c))
    }

    pub(crate) fn set_position(&mut self, v: VertId, p: ExactPoint2) {
        self.fast[v as usize] = exact_f64(&p);
        self.m2.positions[v as usize] = p;
    }

    /// Runs the main loop until the front collapses onto the star of `O`.
    pub fn advance(&mut self) -> Result<(), AfmError> {
        while self.step()? {}
        Ok(())
    }

    /// Pops front edges until one advancing move (or handler sequence) has
    /// been applied. Returns `false` once the run has converged.
    pub fn step(&mut self) -> Result<bool, AfmError> {
        loop {
            if self.converged {
                return Ok(false);
            }
            if self.unvisited == self.front_len && self.only_origin_star_left() {
                self.finish()?;
                return Ok(false);
            }
            let Some((a, b)) = self.queue.pop_front() else {
                if !self.progress {
                    return Err(AfmError::Livelock { unvisited: self.unvisited, front: self.front_len });
                }
                self.progress = false;
                self.events.reseeds += 1;
                self.reseed();
                continue;
            };
            if self.front_next[a as usize] != b {
                continue;
            }
            let start = self.config.move_timeout.map(|_| Instant::now());
            let before = self.events.moves();
            self.process_edge(a, b)?;
            if self.events.moves() == before {
                self.events.skipped += 1;
                continue;
            }
            self.progress = true;
            self.after_move()?;
            if let (Some(limit), Some(start)) = (self.config.move_timeout, start) {
                let elapsed = start.elapsed();
                if elapsed > limit {
                    return Err(AfmError::Timeout { index: self.events.moves(), elapsed });
                }
            }
            return Ok(true);
        }
    }

    fn reseed(&mut self) {
        let front = self.front();
        for (i, &v) in front.iter().enumerate() {
            self.queue.push_back((v, front[(i + 1) % front.len()]));
        }
    }

    fn after_move(&mut self) -> Result<(), AfmError> {
        if self.config.snap_round {
            self.snap_dirty();
        } else {
            self.m2_dirty.clear();
            self.m1_dirty.clear();
        }
        let moves = self.events.moves();
        if let Some(k) = self.config.audit_every {
            if k > 0 && moves.is_multiple_of(k) {
                self.audit()?;
            }
        }
        if let Some(k) = self.config.trace_every {
            if k > 0 && moves.is_multiple_of(k) {
                self.record_trace();
            }
        }
        Ok(())
    }

    fn record_trace(&mut self) {
        if self.config.trace_every.is_some() {
            let front = self.front().iter().map(|&v| self.m2.positions[v as usize].to_f64()).collect();
            self.trace.push(TraceFrame { moves: self.events.moves(), front });
        }
    }

    /// Pops one front edge and performs the advancing move it calls for, if
    /// any.
    fn process_edge(&mut self, a: VertId, b: VertId) -> Result<(), AfmError> {
        let Some(t) = self.m1.topo.tri_of(a, b) else {
            return invariant(format!("front edge ({a}, {b}) has no inner triangle"));
        };
        if self.visited[t as usize] {
            return invariant(format!("inner triangle of front edge ({a}, {b}) already visited"));
        }
        let c = rotate_to(self.m1.topo.triangle(t), a)[2];
        let bc = self.front_next[b as usize] == c;
        let ca = self.front_next[c as usize] == a;
        match (bc, ca) {
            (false, false) => {
                if c == self.origin || self.in_front(c) {
                    return Ok(());
                }
                self.split_move(a, b, c)
            }
            (true, false) => self.two_edge_move(a, b, c),
            (false, true) => self.two_edge_move(c, a, b),
            (true, true) => invariant("triangle with three front edges"),
        }
    }

    /// With as many unvisited triangles as front edges the unvisited region
    /// has a single interior vertex; it is done when every triangle touches
    /// `O`.
    fn only_origin_star_left(&self) -> bool {
        let star = self.m1.topo.star(self.origin);
        star.len() == self.unvisited && star.iter().all(|&t| !self.visited[t as usize])
    }

    fn finish(&mut self) -> Result<(), AfmError> {
        for t in 0..self.visited.len() {
            if !self.visited[t] {
                let tri = self.m1.topo.triangle(t as TriId);
                if !tri.contains(&self.origin) {
                    return invariant(format!("leftover triangle {t} misses the origin"));
                }
                self.visited[t] = true;
            }
        }
        self.unvisited = 0;
        self.converged = true;
        self.record_trace();
        Ok(())
    }

    /// Checks every structural invariant; `Err` describes the first failure.
    pub fn audit(&self) -> Result<(), AfmError> {
        self.m1.topo.check()?;
        self.m2.topo.check()?;
        if self.m1.num_vertices() != self.m2.num_vertices() {
            return invariant("vertex counts differ");
        }
        for t in 0..self.m2.num_triangles() as TriId {
            let [a, b, c] = self.m2.topo.triangle(t);
            if orient2d(&self.m2.positions[a as usize], &self.m2.positions[b as usize], &self.m2.positions[c as usize])
                != Sign::Positive
            {
                return invariant(format!("target triangle ({a}, {b}, {c}) is not positive"));
            }
        }
        for (v, f) in self.fast.iter().enumerate() {
            if *f != exact_f64(&self.m2.positions[v]) {
                return invariant(format!("stale binary64 shadow at {v}"));
            }
        }
        let front = self.front();
        if front.len() != self.front_len {
            return invariant("front length mismatch");
        }
        let mut expected = Vec::with_capacity(self.m2.num_triangles());
        for (i, &a) in front.iter().enumerate() {
            let b = front[(i + 1) % front.len()];
            if self.front_prev[b as usize] != a {
                return invariant("front links disagree");
            }
            match self.m1.topo.tri_of(a, b) {
                Some(t) if !self.visited[t as usize] || self.converged => {}
                _ => return invariant(format!("front edge ({a}, {b}) lacks an unvisited inner triangle")),
            }
            if !self.converged {
                expected.push([a, b, self.origin]);
            }
        }
        for (t, tri) in self.m1.triangles().iter().enumerate() {
            if self.visited[t] {
                expected.push(*tri);
            }
        }
        let canon = |v: &mut Vec<[u32; 3]>| {
            for t in v.iter_mut() {
                let m = *t.iter().min().unwrap();
                *t = rotate_to(*t, m);
            }
            v.sort_unstable();
        };
        canon(&mut expected);
        if expected != self.m2.topo.canonical_triangles() {
            return invariant("target triangles differ from visited images plus the origin fan");
        }
        let unvisited = self.visited.iter().filter(|&&v| !v).count();
        if unvisited != self.unvisited {
            return invariant("unvisited counter drifted");
        }
        Ok(())
    }
}

/// Outcome of a full run from an input mesh.
#[derive(Debug)]
pub struct MapRun {
    pub state: Option<MapState>,
    pub result: Result<(), AfmError>,
    pub preprocess: PreprocessReport,
    pub elapsed: Duration,
}

/// Preprocesses `input`, maps its boundary onto `spec` and runs the engine.
pub fn map_mesh(input: TriMesh<ExactPoint3>, spec: &DomainSpec, rotation_offset: usize, config: AfmConfig) -> MapRun {
    let start = Instant::now();
    let t_in = input.num_triangles();
    let mut m1 = input;
    let setup = (|| -> Result<(PreprocessReport, MapState), AfmError> {
        m1.assert_disk()?;
        let pre = preprocess_refine(&mut m1)?;
        let bmap = map_boundary(&m1, spec, rotation_offset)?;
        let mut state = MapState::init(m1, spec, &bmap, config)?;
        state.set_input_triangles(t_in);
        state.events.preprocess_edge_splits = pre.edge_splits;
        state.events.preprocess_triangle_splits = pre.triangle_splits;
        Ok((pre, state))
    })();
    match setup {
        Err(e) => {
            MapRun { state: None, result: Err(e), preprocess: PreprocessReport::default(), elapsed: start.elapsed() }
        }
        Ok((pre, mut state)) => {
            let result = state.advance();
            MapRun { state: Some(state), result, preprocess: pre, elapsed: start.elapsed() }
        }
    }
}
