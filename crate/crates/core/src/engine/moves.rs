use crate::geom::{affine_combination, Sign};
use crate::mesh::{rotate_to, VertId, NONE};
use crate::Rational;

use super::{invariant, AfmError, MapState};

impl MapState {
    /// One front edge `a -> b` whose inner triangle has an apex `c` strictly
    /// inside the front: split the fan triangle `(a, b, O)` at the image of
    /// `c`.
    pub(crate) fn split_move(&mut self, a: VertId, b: VertId, c: VertId) -> Result<(), AfmError> {
        if !self.m2.topo.is_isolated(c) {
            return invariant(format!("split target {c} already placed"));
        }
        let o = self.origin;
        let p = affine_combination(
            &[
                self.m2.positions[a as usize].clone(),
                self.m2.positions[b as usize].clone(),
                self.m2.positions[o as usize].clone(),
            ],
            &self.config.split_weights,
        )?;
        let Some(fan) = self.m2.topo.tri_of(a, b) else {
            return invariant(format!("front edge ({a}, {b}) has no fan triangle"));
        };
        debug_assert_eq!(rotate_to(self.m2.topo.triangle(fan), a)[2], o);
        self.m2.topo.split_triangle(fan, c)?;
        self.set_position(c, p);
        debug_assert!(self.m2.topo.star(c).iter().all(|&t| {
            let [x, y, z] = self.m2.topo.triangle(t);
            self.orient_v(x, y, z) == Sign::Positive
        }));

        let t = self.m1.topo.tri_of(a, b).expect("inner triangle");
        self.mark_visited(t);
        self.front_next[a as usize] = c;
        self.front_prev[c as usize] = a;
        self.front_next[c as usize] = b;
        self.front_prev[b as usize] = c;
        self.front_len += 1;
        self.queue.push_back((a, c));
        self.queue.push_back((c, b));
        self.events.triangle_splits += 1;
        self.m2_dirty.push(c);
        Ok(())
    }

    /// Inner triangle `(vl, v, vr)` with front edges `vl -> v -> vr`: make
    /// the quad around `(v, O)` strictly convex if needed, then flip.
    pub(crate) fn two_edge_move(&mut self, vl: VertId, v: VertId, vr: VertId) -> Result<(), AfmError> {
        if self.orient_v(vl, v, vr) != Sign::Positive {
            self.convexify(vl, v, vr)?;
        }
        if self.orient_v(vl, vr, self.origin) != Sign::Positive {
            return self.concavify(vl, v, vr);
        }
        self.flip_move(vl, v, vr)
    }

    /// Flips `(v, O)` into `(vl, vr)`, adding the image of `(vl, v, vr)`.
    pub(crate) fn flip_move(&mut self, vl: VertId, v: VertId, vr: VertId) -> Result<(), AfmError> {
        let o = self.origin;
        if self.front_next[vl as usize] != v || self.front_next[v as usize] != vr {
            return invariant("flip move on non-consecutive front vertices");
        }
        if self.orient_v(vl, v, vr) != Sign::Positive || self.orient_v(vl, vr, o) != Sign::Positive {
            return invariant(format!("flip quad at {v} is not strictly convex"));
        }
        self.m2.topo.flip_edge(v, o)?;
        let t = self.m1.topo.tri_of(vl, v).expect("inner triangle");
        if rotate_to(self.m1.topo.triangle(t), vl)[2] != vr {
            return invariant("flip move does not match the source triangle");
        }
        self.mark_visited(t);
        self.front_next[vl as usize] = vr;
        self.front_prev[vr as usize] = vl;
        self.front_next[v as usize] = NONE;
        self.front_prev[v as usize] = NONE;
        self.front_len -= 1;
        self.queue.push_back((vl, vr));
        self.events.edge_flips += 1;
        Ok(())
    }

    pub(crate) fn mark_visited(&mut self, t: u32) {
        debug_assert!(!self.visited[t as usize]);
        self.visited[t as usize] = true;
        self.unvisited -= 1;
    }

    /// Splits the edge `{a, b}` in both meshes at parameter `s` from `a`.
    /// New source triangles inherit the visited flag of their parent; a split
    /// front edge stays on the front through the new vertex.
    pub(crate) fn split_edge_both(&mut self, a: VertId, b: VertId, s: &Rational) -> Result<VertId, AfmError> {
        let parents: Vec<u32> = [self.m1.topo.tri_of(a, b), self.m1.topo.tri_of(b, a)].into_iter().flatten().collect();
        let first_new = self.m1.num_triangles();
        let q = self.m2.split_edge(a, b, s)?;
        let q1 = self.m1.split_edge(a, b, s)?;
        if q != q1 {
            return invariant("vertex numbering diverged");
        }
        self.fast.push(None);
        self.fast[q as usize] = crate::geom::exact_f64(&self.m2.positions[q as usize]);
        self.front_next.push(NONE);
        self.front_prev.push(NONE);
        for (k, &p) in parents.iter().enumerate() {
            debug_assert_eq!(self.visited.len(), first_new + k);
            let vis = self.visited[p as usize];
            self.visited.push(vis);
            if !vis {
                self.unvisited += 1;
            }
        }
        for (u, w) in [(a, b), (b, a)] {
            if self.front_next[u as usize] == w {
                self.front_next[u as usize] = q;
                self.front_prev[q as usize] = u;
                self.front_next[q as usize] = w;
                self.front_prev[w as usize] = q;
                self.front_len += 1;
                self.queue.push_back((u, q));
                self.queue.push_back((q, w));
            }
        }
        self.m2_dirty.push(q);
        self.m1_dirty.push(q);
        Ok(q)
    }
}
