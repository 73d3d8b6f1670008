//! Small mesh generators shared by unit tests.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{ept, Point3};
use crate::mesh::TriMesh;
use crate::{ExactPoint2, ExactPoint3};

/// Perturbed `n x n` grid with random diagonals.
pub(crate) fn random_grid(n: u32, jitter: f64, seed: u64) -> TriMesh<ExactPoint2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let b = i == 0 || j == 0 || i == n || j == n;
            let (dx, dy) = if b || jitter == 0.0 {
                (0.0, 0.0)
            } else {
                (rng.random_range(-jitter..jitter), rng.random_range(-jitter..jitter))
            };
            p.push(ept(i as f64 + dx, j as f64 + dy));
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

/// Lifts a planar mesh onto `z = f(x, y)`.
pub(crate) fn lift(m: &TriMesh<ExactPoint2>, f: impl Fn(f64, f64) -> f64) -> TriMesh<ExactPoint3> {
    let positions = m
        .positions
        .iter()
        .map(|p| {
            let [x, y] = p.to_f64();
            let mut q = Point3::from_f64([x, y, f(x, y)]).unwrap();
            q.x = p.x.clone();
            q.y = p.y.clone();
            q
        })
        .collect();
    TriMesh::from_topology(positions, m.topo.clone())
}
