//! Per-vertex snap rounding of exact coordinates to binary64.

use num_traits::Zero;

use crate::domain::on_segment;
use crate::geom::{orient2d, orient2d_f64, snap_to_double, Point3, Sign};
use crate::mesh::{rotate_to, Position, VertId};

use super::{orient, MapState, Pt};

/// Result of one rounding attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapOutcome {
    Rounded,
    KeptRational,
}

impl MapState {
    pub(crate) fn snap_dirty(&mut self) {
        let m2 = std::mem::take(&mut self.m2_dirty);
        for v in m2 {
            if self.pinned.contains(&v) || self.m2.topo.is_isolated(v) {
                continue;
            }
            self.snap_round_vertex(v);
        }
        let m1 = std::mem::take(&mut self.m1_dirty);
        for v in m1 {
            self.snap_source_vertex(v);
        }
    }

    /// Rounds the target position of `v` to the nearest binary64 point when
    /// every incident triangle keeps a positive orientation (and a boundary
    /// vertex stays on its polygon edge).
    pub fn snap_round_vertex(&mut self, v: VertId) -> SnapOutcome {
        self.events.snap_attempts += 1;
        if self.fast[v as usize].is_some() {
            self.events.snap_rounded += 1;
            return SnapOutcome::Rounded;
        }
        let Ok((d, back)) = snap_to_double(&self.m2.positions[v as usize]) else {
            return SnapOutcome::KeptRational;
        };
        let moved = Pt { e: &back, f: Some(d) };
        let star = self.m2.topo.star(v);
        for &t in &star {
            let [_, x, y] = rotate_to(self.m2.topo.triangle(t), v);
            if orient(moved, self.pt(x), self.pt(y)) != Sign::Positive {
                return SnapOutcome::KeptRational;
            }
        }
        if self.m2.topo.is_boundary_vertex(v) {
            let nb = self.m2.topo.neighbors(v);
            let (a, b) = (nb[0], nb[nb.len() - 1]);
            let (pa, pb) = (&self.m2.positions[a as usize], &self.m2.positions[b as usize]);
            if !on_segment(pa, pb, &back) {
                return SnapOutcome::KeptRational;
            }
        }
        self.set_position(v, back);
        self.events.snap_rounded += 1;
        SnapOutcome::Rounded
    }

    /// Rounds a new source vertex when its incident triangles stay
    /// non-degenerate (and, for planar input, keep their orientation).
    fn snap_source_vertex(&mut self, v: VertId) {
        let p = &self.m1.positions[v as usize];
        let d = p.to_f64();
        if d.iter().any(|x| !x.is_finite()) {
            return;
        }
        let Some(back) = Point3::from_f64(d) else { return };
        if back == *p {
            return;
        }
        for t in self.m1.topo.star(v) {
            let [_, x, y] = rotate_to(self.m1.topo.triangle(t), v);
            let (px, py) = (&self.m1.positions[x as usize], &self.m1.positions[y as usize]);
            if Position::degenerate(&back, px, py) {
                return;
            }
            if self.m1_planar && orient2d(&back.xy(), &px.xy(), &py.xy()) != orient2d(&p.xy(), &px.xy(), &py.xy()) {
                return;
            }
        }
        debug_assert!(!self.m1_planar || back.z.is_zero());
        self.m1.positions[v as usize] = back;
    }

    /// Number of target triangles that would be inverted or degenerate if
    /// every coordinate were rounded to the nearest binary64 value.
    pub fn forced_rounding_flips(&self) -> usize {
        let rounded: Vec<[f64; 2]> =
            self.m2.positions.iter().zip(&self.fast).map(|(p, f)| f.unwrap_or_else(|| p.to_f64())).collect();
        self.m2
            .triangles()
            .iter()
            .filter(|t| {
                orient2d_f64(rounded[t[0] as usize], rounded[t[1] as usize], rounded[t[2] as usize]) != Sign::Positive
            })
            .count()
    }

    /// Placed target vertices whose coordinates are not binary64 values.
    pub fn rational_residual(&self) -> usize {
        (0..self.m2.num_vertices())
            .filter(|&v| self.fast[v].is_none() && !self.m2.topo.is_isolated(v as VertId))
            .count()
    }

    /// Source vertices whose coordinates are not binary64 values.
    pub fn source_rational_residual(&self) -> usize {
        self.m1.positions.iter().filter(|p| Point3::from_f64(p.to_f64()).is_none_or(|b| b != **p)).count()
    }
}
