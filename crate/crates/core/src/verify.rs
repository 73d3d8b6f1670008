//! Post-hoc audits of a computed map and per-run statistics.

use std::fmt;
use std::time::Duration;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::domain::DomainSpec;
use crate::engine::{AfmError, MapRun};
use crate::geom::{orient2d, orient2d_det, Sign};
use crate::mesh::{Position, Topology, TriId, TriMesh, VertId};
use crate::{ExactPoint2, Rational};

/// Connectivity differences between a source and a target mesh.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompatIssues {
    /// `(source, target)` vertex counts when they differ.
    pub vertex_counts: Option<(usize, usize)>,
    /// Vertices that are on the boundary in exactly one of the meshes.
    pub boundary_flags: Vec<VertId>,
    /// Source triangles absent from the target.
    pub missing: usize,
    /// Target triangles absent from the source.
    pub extra: usize,
}

impl CompatIssues {
    pub fn is_empty(&self) -> bool {
        self.vertex_counts.is_none() && self.boundary_flags.is_empty() && self.missing == 0 && self.extra == 0
    }
}

/// Everything that keeps a pair of meshes from being an injective,
/// compatible map. Empty means certified.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    /// Target triangles with non-positive exact orientation.
    pub inverted: Vec<TriId>,
    /// Source triangles with zero area.
    pub degenerate_source: Vec<TriId>,
    pub compat: CompatIssues,
    /// Target boundary vertices off the domain polygon.
    pub off_boundary: Vec<VertId>,
}

impl VerifyReport {
    pub fn is_empty(&self) -> bool {
        self.inverted.is_empty()
            && self.degenerate_source.is_empty()
            && self.compat.is_empty()
            && self.off_boundary.is_empty()
    }
}

fn list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "injective = {}", self.is_empty())?;
        writeln!(f, "inverted_triangles = {}", self.inverted.len())?;
        if !self.inverted.is_empty() {
            writeln!(f, "inverted = {}", list(&self.inverted))?;
        }
        writeln!(f, "degenerate_source_triangles = {}", self.degenerate_source.len())?;
        if !self.degenerate_source.is_empty() {
            writeln!(f, "degenerate_source = {}", list(&self.degenerate_source))?;
        }
        if let Some((a, b)) = self.compat.vertex_counts {
            writeln!(f, "vertex_count_mismatch = {a} {b}")?;
        }
        writeln!(f, "boundary_flag_mismatches = {}", self.compat.boundary_flags.len())?;
        writeln!(f, "missing_triangles = {}", self.compat.missing)?;
        writeln!(f, "extra_triangles = {}", self.compat.extra)?;
        writeln!(f, "off_boundary_vertices = {}", self.off_boundary.len())?;
        if !self.off_boundary.is_empty() {
            writeln!(f, "off_boundary = {}", list(&self.off_boundary))?;
        }
        Ok(())
    }
}

/// Triangles whose exact orientation is not strictly positive.
pub fn check_injective(m2: &TriMesh<ExactPoint2>) -> Vec<TriId> {
    (0..m2.num_triangles() as TriId)
        .filter(|&t| {
            let [a, b, c] = m2.corners(t);
            orient2d(a, b, c) != Sign::Positive
        })
        .collect()
}

/// Triangles of zero area in any embedding.
pub fn check_nondegenerate<P: Position>(m: &TriMesh<P>) -> Vec<TriId> {
    (0..m.num_triangles() as TriId)
        .filter(|&t| {
            let [a, b, c] = m.corners(t);
            P::degenerate(a, b, c)
        })
        .collect()
}

pub fn check_compatible(m1: &Topology, m2: &Topology) -> CompatIssues {
    let mut out = CompatIssues::default();
    if m1.num_vertices() != m2.num_vertices() {
        out.vertex_counts = Some((m1.num_vertices(), m2.num_vertices()));
    }
    let n = m1.num_vertices().min(m2.num_vertices()) as VertId;
    out.boundary_flags = (0..n).filter(|&v| m1.is_boundary_vertex(v) != m2.is_boundary_vertex(v)).collect();
    let (a, b) = (m1.canonical_triangles(), m2.canonical_triangles());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                out.missing += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.extra += 1;
                j += 1;
            }
        }
    }
    out.missing += a.len() - i;
    out.extra += b.len() - j;
    out
}

/// Target boundary vertices that do not lie exactly on the polygon.
pub fn check_boundary(m2: &TriMesh<ExactPoint2>, spec: &DomainSpec) -> Vec<VertId> {
    (0..m2.num_vertices() as VertId)
        .filter(|&v| m2.topo.is_boundary_vertex(v) && !spec.on_boundary(&m2.positions[v as usize]))
        .collect()
}

/// Full audit; boundary conformity is only checked when `spec` is given.
pub fn verify<P: Position>(m1: &TriMesh<P>, m2: &TriMesh<ExactPoint2>, spec: Option<&DomainSpec>) -> VerifyReport {
    VerifyReport {
        inverted: check_injective(m2),
        degenerate_source: check_nondegenerate(m1),
        compat: check_compatible(&m1.topo, &m2.topo),
        off_boundary: spec.map(|s| check_boundary(m2, s)).unwrap_or_default(),
    }
}

/// Slow reference test of injectivity: no triangle is degenerate, no two
/// triangle interiors overlap and the unsigned areas add up to the area
/// enclosed by the boundary loop. Quadratic; meant for small meshes.
pub fn overlap_oracle(m2: &TriMesh<ExactPoint2>) -> bool {
    let tris: Vec<[&ExactPoint2; 3]> = (0..m2.num_triangles() as TriId).map(|t| m2.corners(t)).collect();
    let mut total = Rational::zero();
    for t in &tris {
        let a = orient2d_det(t[0], t[1], t[2]);
        if a.is_zero() {
            return false;
        }
        total += a.abs();
    }
    let Ok(loops) = m2.topo.boundary_loops() else { return false };
    let mut enclosed = Rational::zero();
    for lp in &loops {
        let o = &m2.positions[lp[0] as usize];
        for w in 1..lp.len().saturating_sub(1) {
            enclosed += orient2d_det(o, &m2.positions[lp[w] as usize], &m2.positions[lp[w + 1] as usize]);
        }
    }
    if total != enclosed.abs() {
        return false;
    }
    for i in 0..tris.len() {
        for j in i + 1..tris.len() {
            if interiors_overlap(tris[i], tris[j]) {
                return false;
            }
        }
    }
    true
}

/// Separating-axis test on two non-degenerate triangles.
fn interiors_overlap(s: [&ExactPoint2; 3], t: [&ExactPoint2; 3]) -> bool {
    let separates = |p: [&ExactPoint2; 3], q: [&ExactPoint2; 3]| {
        let ccw = orient2d(p[0], p[1], p[2]);
        (0..3).any(|k| {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            q.iter().all(|x| {
                let o = orient2d(a, b, x);
                o == Sign::Zero || o == -ccw
            })
        })
    };
    !separates(s, t) && !separates(t, s)
}

/// One run summarized with the columns of the usual benchmark table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapStats {
    pub converged: bool,
    /// Visited over total source triangles, as `(numerator, denominator)`.
    pub fraction_done: (u64, u64),
    pub moves: u64,
    pub splits: u64,
    pub flips: u64,
    pub convexifications: u64,
    pub refined_convexifications: u64,
    pub concavifications: u64,
    pub refinement_edge_splits: u64,
    pub input_triangles: u64,
    pub output_triangles: u64,
    pub growth: f64,
    pub interior_vertices: u64,
    pub rational_vertices: u64,
    pub snap_attempts: u64,
    pub snap_rounded: u64,
    /// Inverted target triangles in exact coordinates.
    pub flips_rational: u64,
    /// Inverted target triangles after rounding every coordinate.
    pub flips_double: u64,
    pub time: Duration,
    pub error: Option<String>,
}

impl MapStats {
    pub fn fraction_done_f64(&self) -> f64 {
        if self.fraction_done.1 == 0 {
            0.0
        } else {
            self.fraction_done.0 as f64 / self.fraction_done.1 as f64
        }
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("converged", self.converged.to_string());
        put("fraction_done", format!("{}/{}", self.fraction_done.0, self.fraction_done.1));
        put("moves", self.moves.to_string());
        put("splits", self.splits.to_string());
        put("flips", self.flips.to_string());
        put("convexifications", self.convexifications.to_string());
        put("refined_convexifications", self.refined_convexifications.to_string());
        put("concavifications", self.concavifications.to_string());
        put("refinement_edge_splits", self.refinement_edge_splits.to_string());
        put("input_triangles", self.input_triangles.to_string());
        put("output_triangles", self.output_triangles.to_string());
        put("growth", self.growth.to_string());
        put("interior_vertices", self.interior_vertices.to_string());
        put("rational_vertices", self.rational_vertices.to_string());
        put("snap_attempts", self.snap_attempts.to_string());
        put("snap_rounded", self.snap_rounded.to_string());
        put("flips_rational", self.flips_rational.to_string());
        put("flips_double", self.flips_double.to_string());
        put("time_s", self.time.as_secs_f64().to_string());
        if let Some(e) = &self.error {
            put("error", e.replace('\n', " "));
        }
        s
    }

    /// Inverse of [`MapStats::to_text`].
    pub fn from_text(text: &str) -> Result<MapStats, String> {
        let mut kv = std::collections::HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(" = ").ok_or_else(|| format!("malformed line: {line}"))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| format!("missing key {k}"));
        let num = |k: &str| get(k)?.parse::<u64>().map_err(|e| format!("{k}: {e}"));
        let (a, b) = get("fraction_done")?.split_once('/').ok_or("fraction_done: expected a/b")?;
        Ok(MapStats {
            converged: get("converged")?.parse().map_err(|e| format!("converged: {e}"))?,
            fraction_done: (a.parse().map_err(|_| "fraction_done")?, b.parse().map_err(|_| "fraction_done")?),
            moves: num("moves")?,
            splits: num("splits")?,
            flips: num("flips")?,
            convexifications: num("convexifications")?,
            refined_convexifications: num("refined_convexifications")?,
            concavifications: num("concavifications")?,
            refinement_edge_splits: num("refinement_edge_splits")?,
            input_triangles: num("input_triangles")?,
            output_triangles: num("output_triangles")?,
            growth: get("growth")?.parse().map_err(|e| format!("growth: {e}"))?,
            interior_vertices: num("interior_vertices")?,
            rational_vertices: num("rational_vertices")?,
            snap_attempts: num("snap_attempts")?,
            snap_rounded: num("snap_rounded")?,
            flips_rational: num("flips_rational")?,
            flips_double: num("flips_double")?,
            time: Duration::from_secs_f64(get("time_s")?.parse().map_err(|e| format!("time_s: {e}"))?),
            error: kv.get("error").map(|s| s.to_string()),
        })
    }
}

fn interior_count<P: Position>(m: &TriMesh<P>) -> u64 {
    (0..m.num_vertices() as VertId).filter(|&v| !m.topo.is_isolated(v) && !m.topo.is_boundary_vertex(v)).count() as u64
}

/// Statistics of a finished or aborted run.
pub fn collect_stats(run: &MapRun) -> MapStats {
    let error = run.result.as_ref().err().map(AfmError::to_string);
    let Some(s) = &run.state else {
        return MapStats { fraction_done: (0, 1), time: run.elapsed, error, ..MapStats::default() };
    };
    let ev = s.events();
    let t_in = s.input_triangles() as u64;
    let t_out = s.source().num_triangles() as u64;
    let converged = s.converged() && run.result.is_ok();
    let total = s.source().num_triangles() as u64;
    let done = if converged { total } else { s.visited_count() as u64 };
    MapStats {
        converged,
        fraction_done: (done, total),
        moves: ev.moves(),
        splits: ev.triangle_splits,
        flips: ev.edge_flips,
        convexifications: ev.convexifications,
        refined_convexifications: ev.refined_convexifications,
        concavifications: ev.concavifications,
        refinement_edge_splits: ev.refinement_edge_splits(),
        input_triangles: t_in,
        output_triangles: t_out,
        growth: if t_in == 0 { 0.0 } else { (t_out - t_in).to_f64().unwrap_or(0.0) / t_in as f64 },
        interior_vertices: interior_count(s.source()),
        rational_vertices: s.rational_residual() as u64,
        snap_attempts: ev.snap_attempts,
        snap_rounded: ev.snap_rounded,
        flips_rational: check_injective(s.target()).len() as u64,
        flips_double: s.forced_rounding_flips() as u64,
        time: run.elapsed,
        error,
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};

    use super::*;
    use crate::domain::{make_circle, make_square, make_star};
    use crate::engine::{map_mesh, AfmConfig};
    use crate::geom::{ept, Point3};
    use crate::mesh::Topology;
    use crate::testutil::{lift, random_grid};
    use crate::ExactPoint3;

    fn square_pair() -> (TriMesh<ExactPoint2>, TriMesh<ExactPoint2>) {
        let m = random_grid(3, 0.0, 5);
        (m.clone(), m)
    }

    #[test]
    fn clean_grid_verifies() {
        let (a, b) = square_pair();
        assert!(verify(&a, &b, None).is_empty());
        assert!(overlap_oracle(&b));
    }

    #[test]
    fn inverted_triangle_is_reported() {
        let (a, mut b) = square_pair();
        // centre vertex (1, 1) dragged over its neighbour at (2, 2)
        b.positions[5] = ept(2.5, 2.5);
        let r = verify(&a, &b, None);
        assert!(!r.inverted.is_empty());
        for &t in &r.inverted {
            assert!(b.triangles()[t as usize].contains(&5));
        }
        assert!(!overlap_oracle(&b));
    }

    #[test]
    fn zero_area_triangle_is_reported() {
        let p = vec![ept(0., 0.), ept(1., 0.), ept(2., 0.), ept(1., 1.)];
        let m = TriMesh::from_topology(p, Topology::from_oriented(4, vec![[0, 1, 3], [1, 2, 3]]).unwrap());
        let mut flat = m.clone();
        flat.positions[3] = ept(3., 0.);
        assert_eq!(check_injective(&flat), vec![0, 1]);
        assert_eq!(check_nondegenerate(&flat), vec![0, 1]);
        assert!(check_injective(&m).is_empty());
    }

    #[test]
    fn flipped_edge_breaks_compatibility() {
        let (a, mut b) = square_pair();
        // the diagonal of the centre cell
        let (u, w) = (5, 10);
        let (u, w) = if b.topo.has_edge(u, w) { (u, w) } else { (6, 9) };
        b.topo.flip_edge(u, w).unwrap();
        let c = check_compatible(&a.topo, &b.topo);
        assert_eq!((c.missing, c.extra), (2, 2));
        assert!(c.boundary_flags.is_empty());
    }

    #[test]
    fn vertex_count_mismatch_is_reported() {
        let (a, mut b) = square_pair();
        b.topo.add_vertex();
        b.positions.push(ept(9., 9.));
        assert_eq!(check_compatible(&a.topo, &b.topo).vertex_counts, Some((16, 17)));
    }

    #[test]
    fn off_boundary_vertex_is_reported() {
        let p = vec![ept(0., 0.), ept(1., 0.), ept(1., 1.), ept(0., 1.), ept(0.5, 0.5)];
        let t = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        let mut m = TriMesh::build(p, t).unwrap();
        assert!(check_boundary(&m, &make_square()).is_empty());
        m.positions[1] = ept(0.875, 0.125);
        assert_eq!(check_boundary(&m, &make_square()), vec![1]);
    }

    #[test]
    fn fan_run_has_no_splits() {
        let p: Vec<ExactPoint3> = [(0., 0.), (1., 0.), (0., 1.), (-1., 0.), (0., -1.)]
            .iter()
            .map(|&(x, y)| Point3::from_f64([x, y, 0.]).unwrap())
            .collect();
        let m = TriMesh::build(p, vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]]).unwrap();
        let st = collect_stats(&map_mesh(m, &make_square(), 0, AfmConfig::default()));
        assert!(st.converged);
        assert_eq!((st.splits, st.convexifications, st.moves), (0, 0, 0));
        assert_eq!(st.fraction_done, (4, 4));
        assert_eq!(st.growth, 0.0);
    }

    #[test]
    fn aborted_run_is_partial() {
        let m = lift(&random_grid(6, 0.2, 4), |_, _| 0.0);
        let mut run = map_mesh(m.clone(), &make_square(), 0, AfmConfig::default());
        assert!(run.result.is_ok());
        // stop a fresh state after a few moves
        let spec = make_square();
        let bmap = crate::domain::map_boundary(&m, &spec, 0).unwrap();
        let mut state = crate::engine::MapState::init(m, &spec, &bmap, AfmConfig::default()).unwrap();
        for _ in 0..5 {
            state.step().unwrap();
        }
        run.state = Some(state);
        run.result = Err(AfmError::Timeout { index: 5, elapsed: Duration::from_secs(3) });
        let st = collect_stats(&run);
        assert!(!st.converged);
        assert!(st.fraction_done.0 < st.fraction_done.1);
        assert!(st.fraction_done_f64() < 1.0);
        assert_eq!(st.moves, st.splits + st.flips);
        let r = verify(run.state.as_ref().unwrap().source(), run.state.as_ref().unwrap().target(), None);
        assert!(r.compat.missing > 0);
    }

    #[test]
    fn stats_text_round_trip() {
        let m = lift(&random_grid(5, 0.2, 9), |x, _| 0.1 * x);
        let st = collect_stats(&map_mesh(m, &make_star(5, 0.5).unwrap(), 1, AfmConfig::default()));
        let back = MapStats::from_text(&st.to_text()).unwrap();
        assert_eq!(back.to_text(), st.to_text());
        assert_eq!(st.moves, st.splits + st.flips);
        assert_eq!(st.flips_rational, 0);
        let t = st.input_triangles as f64;
        assert_eq!(st.growth, (st.output_triangles as f64 - t) / t);
    }

    /// Moves every interior vertex by up to `amount`, which may or may not
    /// fold the map.
    fn shake(m: &mut TriMesh<ExactPoint2>, amount: f64, seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for v in 0..m.num_vertices() as VertId {
            if m.topo.is_boundary_vertex(v) || rng.random_range(0.0..1.0) < 0.7 {
                continue;
            }
            let [x, y] = m.positions[v as usize].to_f64();
            m.positions[v as usize] = ept(x + rng.random_range(-amount..amount), y + rng.random_range(-amount..amount));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn orientation_check_matches_overlap_oracle(n in 2u32..7, seed in any::<u64>(), amount in 0.0f64..1.5) {
            let mut m = random_grid(n, 0.2, seed);
            shake(&mut m, amount, seed ^ 1);
            prop_assert_eq!(check_injective(&m).is_empty(), overlap_oracle(&m));
        }

        #[test]
        fn afm_outputs_pass_both_checks(n in 4u32..7, seed in any::<u64>(), dom in 0usize..3) {
            let spec = [make_circle(12).unwrap(), make_square(), make_star(5, 0.5).unwrap()][dom].clone();
            let run = map_mesh(lift(&random_grid(n, 0.25, seed), |_, _| 0.0), &spec, 2, AfmConfig::default());
            let s = run.state.as_ref().unwrap();
            prop_assert!(run.result.is_ok());
            prop_assert!(verify(s.source(), s.target(), Some(&spec)).is_empty());
            prop_assert!(overlap_oracle(s.target()));
        }
    }
}
