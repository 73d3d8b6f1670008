//! Uniform-weight Tutte embedding in binary64, the fixed-connectivity
//! baseline.

use sprs::{CsMat, TriMat};
use thiserror::Error;

use crate::domain::BoundaryMap;
use crate::geom::{orient2d_f64, Sign};
use crate::mesh::{MeshError, Position, Topology, TriMesh, VertId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TutteError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("boundary map does not match the mesh boundary")]
    BoundaryMismatch,
    #[error("conjugate gradients stalled at relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Interior Laplacian `L x = b`: degree on the diagonal, `-1` per interior
/// neighbour; boundary neighbours move to the right-hand side.
#[derive(Debug, Clone)]
pub struct TutteSystem {
    /// Mesh vertex of each unknown.
    pub interior: Vec<VertId>,
    pub matrix: CsMat<f64>,
    pub rhs: [Vec<f64>; 2],
    /// Fixed boundary positions indexed by mesh vertex (`None` inside).
    pub fixed: Vec<Option<[f64; 2]>>,
}

/// Solved positions with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TutteSolution {
    pub positions: Vec<[f64; 2]>,
    pub iterations: usize,
    /// Largest relative residual of the two coordinate solves.
    pub residual: f64,
}

impl TutteSystem {
    pub fn new(topo: &Topology, boundary: &BoundaryMap) -> Result<Self, TutteError> {
        let n = topo.num_vertices();
        let mut fixed = vec![None; n];
        for (&v, p) in boundary.vertices.iter().zip(&boundary.positions) {
            if !topo.is_boundary_vertex(v) {
                return Err(TutteError::BoundaryMismatch);
            }
            fixed[v as usize] = Some(p.to_f64());
        }
        let mut slot = vec![usize::MAX; n];
        let mut interior = Vec::new();
        for v in 0..n as VertId {
            if topo.is_isolated(v) {
                continue;
            }
            if topo.is_boundary_vertex(v) {
                if fixed[v as usize].is_none() {
                    return Err(TutteError::BoundaryMismatch);
                }
                continue;
            }
            slot[v as usize] = interior.len();
            interior.push(v);
        }
        let k = interior.len();
        let mut tri = TriMat::new((k, k));
        let mut rhs = [vec![0.0; k], vec![0.0; k]];
        for (i, &v) in interior.iter().enumerate() {
            let nb = topo.neighbors(v);
            tri.add_triplet(i, i, nb.len() as f64);
            for u in nb {
                match fixed[u as usize] {
                    Some(p) => {
                        rhs[0][i] += p[0];
                        rhs[1][i] += p[1];
                    }
                    None => tri.add_triplet(i, slot[u as usize], -1.0),
                }
            }
        }
        Ok(TutteSystem { interior, matrix: tri.to_csr(), rhs, fixed })
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (row, vec) in self.matrix.outer_iterator().enumerate() {
            out[row] = vec.iter().map(|(c, &a)| a * x[c]).sum();
        }
    }

    /// Jacobi-preconditioned conjugate gradients on each coordinate.
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<TutteSolution, TutteError> {
        let k = self.interior.len();
        let diag: Vec<f64> = (0..k).map(|i| *self.matrix.get(i, i).expect("diagonal")).collect();
        let mut sol = [vec![0.0; k], vec![0.0; k]];
        let mut iterations = 0;
        let mut residual: f64 = 0.0;
        for (b, x) in self.rhs.iter().zip(&mut sol) {
            let bnorm = norm(b).max(f64::MIN_POSITIVE);
            let mut r = b.clone();
            let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
            let mut p = z.clone();
            let mut ap = vec![0.0; k];
            let mut rz = dot(&r, &z);
            let mut it = 0;
            while norm(&r) / bnorm > tol {
                if it == max_iter {
                    return Err(TutteError::NoConvergence { iterations: it, residual: norm(&r) / bnorm });
                }
                self.apply(&p, &mut ap);
                let alpha = rz / dot(&p, &ap);
                for i in 0..k {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                for i in 0..k {
                    z[i] = r[i] / diag[i];
                }
                let rz_next = dot(&r, &z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..k {
                    p[i] = z[i] + beta * p[i];
                }
                it += 1;
            }
            // report the true residual, not the recurrence
            let mut lx = vec![0.0; k];
            self.apply(x, &mut lx);
            let true_r: Vec<f64> = lx.iter().zip(b).map(|(a, b)| a - b).collect();
            residual = residual.max(norm(&true_r) / bnorm);
            iterations += it;
        }
        let mut positions: Vec<[f64; 2]> = self.fixed.iter().map(|p| p.unwrap_or([0.0, 0.0])).collect();
        for (i, &v) in self.interior.iter().enumerate() {
            positions[v as usize] = [sol[0][i], sol[1][i]];
        }
        Ok(TutteSolution { positions, iterations, residual })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // an empty sum is -0.0
    dot(a, a).sqrt().abs()
}

/// Relative residual the default embedding is solved to.
pub const TUTTE_TOLERANCE: f64 = 1e-10;

/// Tutte embedding of `mesh` with the boundary fixed by `bmap`.
pub fn tutte_embed<P: Position>(mesh: &TriMesh<P>, bmap: &BoundaryMap) -> Result<TutteSolution, TutteError> {
    mesh.assert_disk()?;
    let sys = TutteSystem::new(&mesh.topo, bmap)?;
    sys.solve(TUTTE_TOLERANCE, 20 * sys.interior.len() + 100)
}

/// Triangles whose binary64 orientation is not strictly positive. The
/// predicate is exact on the given doubles.
pub fn count_flips(positions: &[[f64; 2]], topo: &Topology) -> usize {
    topo.triangles()
        .iter()
        .filter(|t| {
            orient2d_f64(positions[t[0] as usize], positions[t[1] as usize], positions[t[2] as usize]) != Sign::Positive
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_circle, make_star, map_boundary};
    use crate::geom::ept;
    use crate::testutil::random_grid;
    use crate::ExactPoint2;

    #[test]
    fn fan_centre_lands_on_centroid() {
        let k = 7;
        let mut p = vec![ept(0.3, -0.2)];
        let mut t = Vec::new();
        for i in 0..k {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            p.push(ept(a.cos(), a.sin()));
            t.push([0, 1 + i, 1 + (i + 1) % k]);
        }
        let m = TriMesh::build(p, t).unwrap();
        let spec = make_circle(k as usize).unwrap();
        let bmap = map_boundary(&m, &spec, 0).unwrap();
        let sol = tutte_embed(&m, &bmap).unwrap();
        let c: [f64; 2] = spec.polygon.iter().fold([0.0, 0.0], |acc, q| {
            let q = q.to_f64();
            [acc[0] + q[0] / k as f64, acc[1] + q[1] / k as f64]
        });
        assert!((sol.positions[0][0] - c[0]).abs() < 1e-12 && (sol.positions[0][1] - c[1]).abs() < 1e-12);
        assert_eq!(count_flips(&sol.positions, &m.topo), 0);
    }

    #[test]
    fn grid_on_circle_has_no_flips_and_is_harmonic() {
        let m = random_grid(12, 0.3, 11);
        let bmap = map_boundary(&m, &make_circle(32).unwrap(), 0).unwrap();
        let sol = tutte_embed(&m, &bmap).unwrap();
        assert!(sol.residual <= TUTTE_TOLERANCE);
        assert_eq!(count_flips(&sol.positions, &m.topo), 0);
        for v in 0..m.num_vertices() as VertId {
            if m.topo.is_boundary_vertex(v) {
                continue;
            }
            let nb = m.topo.neighbors(v);
            let avg = nb.iter().fold([0.0, 0.0], |a, &u| {
                let q = sol.positions[u as usize];
                [a[0] + q[0] / nb.len() as f64, a[1] + q[1] / nb.len() as f64]
            });
            let p = sol.positions[v as usize];
            assert!((p[0] - avg[0]).abs() < 1e-8 && (p[1] - avg[1]).abs() < 1e-8);
        }
        for (&v, q) in bmap.vertices.iter().zip(&bmap.positions) {
            assert_eq!(sol.positions[v as usize], q.to_f64());
        }
    }

    #[test]
    fn mirrored_mesh_flips_everything() {
        let m = random_grid(4, 0.2, 1);
        let mirrored: Vec<[f64; 2]> = m
            .positions
            .iter()
            .map(|p| {
                let [x, y] = p.to_f64();
                [-x, y]
            })
            .collect();
        assert_eq!(count_flips(&mirrored, &m.topo), m.num_triangles());
    }

    #[test]
    fn shifted_star_outline_folds() {
        // ten outline vertices (tips even) plus the inner pentagon fan
        let star = make_star(5, 0.5).unwrap();
        let p: Vec<ExactPoint2> = star.polygon.clone();
        let mut t: Vec<[u32; 3]> = (0..5).map(|i| [2 * i + 1, (2 * i + 2) % 10, (2 * i + 3) % 10]).collect();
        t.extend([[1, 3, 5], [1, 5, 7], [1, 7, 9]]);
        let m = TriMesh::build(p, t).unwrap();
        let straight = tutte_embed(&m, &map_boundary(&m, &star, 0).unwrap()).unwrap();
        assert_eq!(count_flips(&straight.positions, &m.topo), 0);
        let shifted = tutte_embed(&m, &map_boundary(&m, &star, 1).unwrap()).unwrap();
        assert!(count_flips(&shifted.positions, &m.topo) >= 1);
    }
}
