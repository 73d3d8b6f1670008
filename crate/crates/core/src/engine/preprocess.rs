use num_traits::Zero;

use crate::geom::Point3;
use crate::mesh::{TriMesh, VertId};
use crate::scalar::Scalar;
use crate::{ExactPoint3, Rational};

use super::AfmError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub edge_splits: u64,
    pub triangle_splits: u64,
}

/// Splits every interior edge joining two boundary vertices at its midpoint.
/// A mesh left without interior vertices (a lone triangle) gets a barycentric
/// split so that an origin exists.
pub fn preprocess_refine(m1: &mut TriMesh<ExactPoint3>) -> Result<PreprocessReport, AfmError> {
    let mut report = PreprocessReport::default();
    let half = Rational::from_ratio(1, 2);
    let mut edges: Vec<(VertId, VertId)> = Vec::new();
    for t in m1.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if a < b && m1.topo.is_boundary_vertex(a) && m1.topo.is_boundary_vertex(b) && m1.topo.tri_of(b, a).is_some()
            {
                edges.push((a, b));
            }
        }
    }
    for (a, b) in edges {
        m1.split_edge(a, b, &half)?;
        report.edge_splits += 1;
    }
    let has_interior =
        (0..m1.num_vertices() as VertId).any(|v| !m1.topo.is_boundary_vertex(v) && !m1.topo.is_isolated(v));
    if !has_interior {
        let third = Rational::from_ratio(1, 3);
        let [a, b, c] = m1.corners(0);
        let mut g = Point3::new(Rational::zero(), Rational::zero(), Rational::zero());
        for p in [a, b, c] {
            g = g.add(&p.scale(&third));
        }
        m1.split_triangle(0, g)?;
        report.triangle_splits += 1;
    }
    Ok(report)
}
