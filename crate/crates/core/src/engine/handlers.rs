//! Deadlock handlers: convexification (with local refinement) and
//! concavification.

use num_traits::{One, Signed, Zero};

use crate::domain::{clip_closed, polygon_area2};
use crate::geom::{orient2d, segment_line_param, Point2, Sign};
use crate::mesh::{rotate_to, TriId, VertId, NONE};
use crate::scalar::Scalar;
use crate::{ExactPoint2, Rational};

use super::{invariant, orient, AfmError, MapState, Pt};

/// Which fan triangle receives the concavification vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// Fan `(vl, v, O)`; the first move inserts `(vl, v, vn)`.
    Left,
    /// Fan `(v, vr, O)`; the first move inserts `(vn, v, vr)`.
    Right,
}

impl MapState {
    /// The front is not strictly convex at `v`: pull `vl` or `vr` towards `O`
    /// past the line through `v` and the other neighbour.
    pub(crate) fn convexify(&mut self, vl: VertId, v: VertId, vr: VertId) -> Result<(), AfmError> {
        let o = self.origin;
        let pos = |s: &Self, x: VertId| s.m2.positions[x as usize].clone();
        let (po, pv, pl, pr) = (pos(self, o), pos(self, v), pos(self, vl), pos(self, vr));
        // p_r on [vr, O] along the line (vl, v); p_l on [vl, O] along (vr, v)
        let Some(sr) = segment_line_param(&pr, &po, &pl, &pv, true) else {
            return invariant(format!("no convexification point for {vr}"));
        };
        let Some(sl) = segment_line_param(&pl, &po, &pr, &pv, true) else {
            return invariant(format!("no convexification point for {vl}"));
        };
        let p_r = pr.lerp(&po, &sr);
        let p_l = pl.lerp(&po, &sl);
        let pick_right = p_r.dist2(&po) >= p_l.dist2(&po);
        let r_fixed = self.m1.topo.is_boundary_vertex(vr);
        let l_fixed = self.m1.topo.is_boundary_vertex(vl);
        let (w, p) = match (pick_right, r_fixed, l_fixed) {
            (_, true, true) => return invariant("both front neighbours lie on the domain boundary"),
            (true, false, _) | (false, false, true) => (vr, p_r),
            _ => (vl, p_l),
        };
        let lift = &self.config.lift;
        let target = p.scale(lift).add(&po.scale(&(Rational::one() - lift)));
        self.convexify_refine(w, &target)?;
        self.set_position(w, target);
        self.m2_dirty.push(w);
        self.events.convexifications += 1;
        if self.orient_v(vl, v, vr) != Sign::Positive {
            return invariant(format!("front still concave at {v} after convexification"));
        }
        Ok(())
    }

    /// Splits the target triangles around front vertex `w` that would lose
    /// their orientation if `w` moved to `target` on segment `(w, O)`. The
    /// same edge splits are applied to the source mesh. Returns the number of
    /// splits.
    ///
    /// With directions measured counterclockwise from `O - w`, triangles on
    /// the near side (both edges within half a turn) are fixed by splitting
    /// their counterclockwise edge at the line through the other vertex and
    /// `O`, walking counterclockwise; the far side symmetrically walking
    /// clockwise. The triangle straddling the opposite direction is split on
    /// its far edge at the line through `w` and `O`.
    pub(crate) fn convexify_refine(&mut self, w: VertId, target: &ExactPoint2) -> Result<u64, AfmError> {
        let o = self.origin;
        let wl = self.front_prev[w as usize];
        let wr = self.front_next[w as usize];
        if wl == NONE || self.m1.topo.is_boundary_vertex(w) {
            return invariant(format!("cannot relocate vertex {w}"));
        }
        let valence = self.m2.topo.valence(w) as u64;
        let tgt = Pt::new(target);
        let endangered = |s: &Self, x: VertId, y: VertId| orient(tgt, s.pt(x), s.pt(y)) != Sign::Positive;
        let mut splits = 0u64;

        // counterclockwise from the triangle behind (wl, w)
        let mut t = self.tri_around(w, wl)?;
        loop {
            let [_, x, mut y] = rotate_to(self.m2.topo.triangle(t), w);
            if self.orient_v(y, w, o) != Sign::Negative && endangered(self, x, y) {
                let s = self.refine_param(w, y, x)?;
                y = self.refine_split(w, y, &s)?;
                splits += 1;
            }
            if y == wr {
                break;
            }
            t = self.tri_around(w, y)?;
        }

        // clockwise from the triangle behind (w, wr)
        let mut t = self.tri_around(wr, w)?;
        loop {
            let [_, mut x, y] = rotate_to(self.m2.topo.triangle(t), w);
            if self.orient_v(w, x, o) != Sign::Negative && endangered(self, x, y) {
                let s = self.refine_param(w, x, y)?;
                x = self.refine_split(w, x, &s)?;
                splits += 1;
            }
            if x == wl {
                break;
            }
            t = self.tri_around(x, w)?;
        }

        // the straddling triangle
        for t in self.m2.topo.star(w) {
            let [_, x, y] = rotate_to(self.m2.topo.triangle(t), w);
            if x == o || y == o {
                continue;
            }
            if self.orient_v(w, x, o) == Sign::Negative
                && self.orient_v(y, w, o) == Sign::Negative
                && endangered(self, x, y)
            {
                let s = self.refine_param(x, y, w)?;
                self.refine_split(x, y, &s)?;
                splits += 1;
                break;
            }
        }

        for t in self.m2.topo.star(w) {
            let [_, x, y] = rotate_to(self.m2.topo.triangle(t), w);
            if endangered(self, x, y) {
                return invariant(format!("refinement left triangle ({w}, {x}, {y}) endangered"));
            }
        }
        if splits > 0 {
            self.events.refined_convexifications += 1;
        }
        if splits > valence {
            self.events.refine_bound_violations += 1;
        }
        self.events.refine_max_splits = self.events.refine_max_splits.max(splits);
        Ok(splits)
    }

    /// Triangle containing `a -> b` in the target mesh.
    fn tri_around(&self, a: VertId, b: VertId) -> Result<TriId, AfmError> {
        match self.m2.topo.tri_of(a, b) {
            Some(t) => Ok(t),
            None => invariant(format!("missing target edge ({a}, {b})")),
        }
    }

    /// Parameter from `a` towards `b` where segment `(a, b)` meets the line
    /// through `c` and `O`.
    fn refine_param(&self, a: VertId, b: VertId, c: VertId) -> Result<Rational, AfmError> {
        let p = |x: VertId| &self.m2.positions[x as usize];
        match segment_line_param(p(a), p(b), p(c), p(self.origin), false) {
            Some(s) => Ok(s),
            None => invariant(format!("refinement line misses edge ({a}, {b})")),
        }
    }

    fn refine_split(&mut self, a: VertId, b: VertId, s: &Rational) -> Result<VertId, AfmError> {
        let q = self.split_edge_both(a, b, s)?;
        self.events.refine_edge_splits += 1;
        if !self.m1.topo.is_boundary_vertex(q) {
            self.events.refine_interior_vertices += 1;
        }
        Ok(q)
    }

    /// `O` lies in the closed triangle `(Φvl, Φv, Φvr)`, so flipping `(v, O)`
    /// would invert. Splits the source edge `(vl, vr)` at its midpoint `vn`,
    /// places `Φvn` in one of the two fan triangles at `v` so that the next
    /// three advancing moves need no further handling, and performs the
    /// first two of them (a triangle split inserting `Φvn`, then a flip at
    /// `v`).
    pub(crate) fn concavify(&mut self, vl: VertId, v: VertId, vr: VertId) -> Result<(), AfmError> {
        let Some(z) = self.m1.topo.apex(vl, vr) else {
            return invariant(format!("source edge ({vl}, {vr}) has no outer triangle"));
        };
        let vll = self.front_prev[vl as usize];
        let vrr = self.front_next[vr as usize];
        let order = if z == vrr && z != vll { [Side::Right, Side::Left] } else { [Side::Left, Side::Right] };
        let mut choice = None;
        'outer: for strict in [true, false] {
            for side in order {
                if let Some(p) = self.concavify_point(vl, v, vr, z, side, strict) {
                    choice = Some((side, p));
                    if !strict {
                        self.events.concavify_fallbacks += 1;
                    }
                    break 'outer;
                }
            }
        }
        let Some((side, p)) = choice else {
            return invariant(format!("empty concavification region at {v}"));
        };

        let half = Rational::from_ratio(1, 2);
        let parents: Vec<u32> =
            [self.m1.topo.tri_of(vl, vr), self.m1.topo.tri_of(vr, vl)].into_iter().flatten().collect();
        let vn = self.m1.split_edge(vl, vr, &half)?;
        for _ in parents {
            self.visited.push(false);
            self.unvisited += 1;
        }
        let reserved = self.m2.topo.add_vertex();
        self.m2.positions.push(Point2::new(Rational::zero(), Rational::zero()));
        self.fast.push(None);
        self.front_next.push(NONE);
        self.front_prev.push(NONE);
        if reserved != vn {
            return invariant("vertex numbering diverged");
        }
        self.events.concavifications += 1;
        self.events.concavify_edge_splits += 1;
        self.m1_dirty.push(vn);
        self.pinned.push(vn);

        match side {
            Side::Left => {
                self.split_move_at(vl, v, vn, p)?;
                self.flip_move(vn, v, vr)
            }
            Side::Right => {
                self.split_move_at(v, vr, vn, p)?;
                self.flip_move(vl, v, vn)
            }
        }
    }

    /// A point strictly inside the fan triangle of `side` satisfying the
    /// flip conditions of the second move and, with `strict`, of the third.
    fn concavify_point(
        &self,
        vl: VertId,
        v: VertId,
        vr: VertId,
        z: VertId,
        side: Side,
        strict: bool,
    ) -> Option<ExactPoint2> {
        let o = self.origin;
        let vll = self.front_prev[vl as usize];
        let vrr = self.front_next[vr as usize];
        // each pair (a, b) asks for orient(a, b, P) > 0
        let mut planes: Vec<(VertId, VertId)> = match side {
            Side::Left => vec![(vl, v), (v, o), (o, vl), (vr, o)],
            Side::Right => vec![(v, vr), (vr, o), (o, v), (o, vl)],
        };
        if strict {
            if z == vll {
                planes.push((vll, vl));
                planes.push((o, vll));
            }
            if z == vrr {
                planes.push((vr, vrr));
                planes.push((vrr, o));
            }
        }
        let p = |x: VertId| &self.m2.positions[x as usize];
        let mut region: Vec<ExactPoint2> = match side {
            Side::Left => vec![p(vl).clone(), p(v).clone(), p(o).clone()],
            Side::Right => vec![p(v).clone(), p(vr).clone(), p(o).clone()],
        };
        for &(a, b) in &planes[3..] {
            region = clip_closed(&region, p(a), p(b));
            if region.len() < 3 {
                return None;
            }
        }
        if !polygon_area2(&region).is_positive() {
            return None;
        }
        let k = Rational::from_integer((region.len() as i64).into());
        let mut c = Point2::new(Rational::zero(), Rational::zero());
        for q in &region {
            c = c.add(q);
        }
        let c = Point2::new(c.x / k.clone(), c.y / k);
        let ok = |q: &ExactPoint2| planes.iter().all(|&(a, b)| orient2d(p(a), p(b), q) == Sign::Positive);
        debug_assert!(ok(&c));
        if let Some(r) = Point2::from_f64(c.to_f64()) {
            if ok(&r) {
                return Some(r);
            }
        }
        Some(c)
    }

    /// Inserts the isolated vertex `c` at `p` inside the fan triangle of
    /// front edge `a -> b`, as an ordinary split move.
    fn split_move_at(&mut self, a: VertId, b: VertId, c: VertId, p: ExactPoint2) -> Result<(), AfmError> {
        let Some(fan) = self.m2.topo.tri_of(a, b) else {
            return invariant(format!("front edge ({a}, {b}) has no fan triangle"));
        };
        self.m2.split_triangle_with(fan, c, p.clone())?;
        self.set_position(c, p);
        let t = self.m1.topo.tri_of(a, b).expect("inner triangle");
        if rotate_to(self.m1.topo.triangle(t), a)[2] != c {
            return invariant("concavification split does not match the source triangle");
        }
        self.mark_visited(t);
        self.front_next[a as usize] = c;
        self.front_prev[c as usize] = a;
        self.front_next[c as usize] = b;
        self.front_prev[b as usize] = c;
        self.front_len += 1;
        self.queue.push_back((a, c));
        self.queue.push_back((c, b));
        self.events.triangle_splits += 1;
        Ok(())
    }
}
