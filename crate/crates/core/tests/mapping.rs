use afm::domain::{make_circle, make_square, make_star, DomainSpec};
use afm::engine::{map_mesh, AfmConfig};
use afm::verify::{collect_stats, verify};
use afm::{ExactPoint3, Point3, TriMesh};
use proptest::prelude::*;

/// Jittered `n x n` grid of quads, each cut along the diagonal chosen by `cuts`.
fn grid(n: usize, jitter: &[(f64, f64)], cuts: &[bool], bump: f64) -> TriMesh<ExactPoint3> {
    let h = 1.0 / n as f64;
    let mut positions = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let inner = i > 0 && j > 0 && i < n && j < n;
            let (dx, dy) = if inner { jitter[j * (n + 1) + i] } else { (0.0, 0.0) };
            let (x, y) = ((i as f64 + 0.3 * dx) * h, (j as f64 + 0.3 * dy) * h);
            let z = bump * (x * (1.0 - x) * y * (1.0 - y));
            positions.push(Point3::from_f64([x, y, z]).unwrap());
        }
    }
    let at = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    let mut tris = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            if cuts[j * n + i] {
                tris.extend([[a, b, c], [a, c, d]]);
            } else {
                tris.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    TriMesh::build(positions, tris).unwrap()
}

fn domain(k: usize) -> DomainSpec {
    match k {
        0 => make_circle(12).unwrap(),
        1 => make_square(),
        _ => make_star(5, 0.5).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grids_map_injectively(
        n in 3usize..7,
        jitter in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64),
        cuts in prop::collection::vec(any::<bool>(), 49),
        bump in prop_oneof![Just(0.0), -4.0f64..4.0],
        dom in 0usize..3,
        offset in 0usize..40,
    ) {
        let input = grid(n, &jitter, &cuts, bump);
        let boundary_before: Vec<_> = (0..input.num_vertices() as u32)
            .filter(|&v| input.topo.is_boundary_vertex(v))
            .map(|v| input.positions[v as usize].clone())
            .collect();
        let spec = domain(dom);
        let run = map_mesh(input, &spec, offset, AfmConfig { audit_every: Some(1), ..AfmConfig::default() });
        prop_assert!(run.result.is_ok(), "{:?}", run.result);
        let s = run.state.as_ref().unwrap();
        prop_assert!(s.converged());
        prop_assert!(verify(s.source(), s.target(), Some(&spec)).is_empty());

        let st = collect_stats(&run);
        let ev = s.events();
        prop_assert_eq!(st.moves, st.splits + st.flips);
        prop_assert_eq!(st.splits + ev.refine_interior_vertices + 1, st.interior_vertices);
        prop_assert_eq!(st.flips_rational, 0);
        prop_assert!(st.output_triangles >= st.input_triangles);

        // input boundary vertices keep their source positions
        for (v, p) in boundary_before.iter().enumerate() {
            prop_assert!(s.source().positions.contains(p), "boundary vertex {v} moved");
        }
    }
}

#[test]
fn too_few_boundary_vertices_for_the_polygon() {
    let positions = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
    let input =
        TriMesh::build(positions.iter().map(|&p| Point3::from_f64(p).unwrap()).collect(), vec![[0, 1, 2]]).unwrap();
    let run = map_mesh(input, &make_square(), 0, AfmConfig::default());
    assert!(run.state.is_none());
    assert!(run.result.unwrap_err().to_string().contains("boundary"));
}

#[test]
fn a_mesh_with_two_boundary_loops_is_rejected() {
    // two triangles sharing only a vertex
    let positions = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
    let input =
        TriMesh::build(positions.iter().map(|&p| Point3::from_f64(p).unwrap()).collect(), vec![[0, 1, 2], [0, 3, 4]]);
    let rejected = match input {
        Err(_) => true,
        Ok(m) => {
            let run = map_mesh(m, &make_square(), 0, AfmConfig::default());
            run.state.is_none() && run.result.is_err()
        }
    };
    assert!(rejected);
}
