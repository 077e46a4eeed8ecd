mod common;

use divfree::generate::{appendix_hexagon, generate_mesh, perturbed, square_crisscross};
use divfree::patch::{counts_and_layers, patch_geometry, vertex_patch};
use divfree::{MeshKind, Point2, Triangulation};
use proptest::prelude::*;

fn check_topology(tri: &Triangulation) {
    let c = counts_and_layers(tri);
    assert_eq!(c.euler_characteristic(), 1);
    assert_eq!(c.boundary_edges, c.boundary_vertices);
    for t in 0..tri.n_cells() {
        assert!(tri.cell_area(t) > 0.0);
    }
    for e in 0..tri.n_edges() {
        let [a, b] = tri.edge(e);
        assert!(a < b);
        let n = tri.edge_cells(e).iter().filter(|&&t| t != divfree::mesh::NO_CELL).count();
        assert_eq!(tri.is_boundary_edge(e), n == 1);
    }
    for v in 0..tri.n_vertices() {
        let on = tri.vertex_edges(v).iter().any(|&e| tri.is_boundary_edge(e));
        assert_eq!(tri.is_boundary_vertex(v), on);
    }
    for t in 0..tri.n_cells() {
        let interior = tri.cell_edges(t).iter().all(|&e| !tri.is_boundary_edge(e));
        assert_eq!(tri.is_interior_cell(t), interior);
    }
}

#[test]
fn hexagon_initial_counts() {
    let m = appendix_hexagon().unwrap();
    let c = counts_and_layers(&m);
    assert_eq!((c.vertices, c.edges, c.interior_edges, c.interior_vertices, c.interior_cells), (7, 12, 6, 1, 0));
    let inner: Vec<usize> = m.interior_vertices().collect();
    assert_eq!(inner.len(), 1);
    assert_eq!(m.vertex(inner[0]), Point2::new(0.5, 0.5));
    assert!((m.total_area() - 0.75).abs() < 1e-15);
    check_topology(&m);
}

#[test]
fn refinement_counts() {
    let m = appendix_hexagon().unwrap().refine().unwrap();
    let c = counts_and_layers(&m);
    assert_eq!((c.cells, c.vertices, c.interior_vertices, c.interior_edges, c.interior_cells), (24, 19, 7, 30, 12));
    assert!(c.interior_cell_identity_holds());
    assert_eq!(appendix_hexagon().unwrap().refined(2).unwrap().n_cells(), 96);
}

#[test]
fn refinement_keeps_originals_first() {
    let m = square_crisscross(2).unwrap();
    let r = m.refine().unwrap();
    assert_eq!(r.n_vertices(), m.n_vertices() + m.n_edges());
    for v in 0..m.n_vertices() {
        assert_eq!(r.vertex(v), m.vertex(v));
    }
    for (e, [a, b]) in m.edges().iter().enumerate() {
        assert_eq!(r.vertex(m.n_vertices() + e), m.vertex(*a).midpoint(m.vertex(*b)));
    }
}

#[test]
fn generated_families_are_valid() {
    for (name, m) in common::suite() {
        check_topology(&m);
        let c = counts_and_layers(&m);
        assert!(c.assumption1_holds(), "{name}");
        assert!(c.interior_cell_identity_holds(), "{name}");
        let parts: usize = (1..=c.number_of_layers)
            .map(|k| c.layer.iter().filter(|&&l| l == Some(k)).count())
            .sum();
        assert_eq!(parts, c.interior_vertices, "{name}: layers must partition the interior vertices");
    }
}

#[test]
fn crisscross_one() {
    let m = square_crisscross(1).unwrap();
    assert_eq!((m.n_cells(), m.n_vertices()), (4, 5));
    assert_eq!(m.interior_vertices().collect::<Vec<_>>(), vec![4]);
}

#[test]
fn perturbed_is_reproducible() {
    let base = appendix_hexagon().unwrap().refined(2).unwrap();
    let a = perturbed(&base, 0.1, 1).unwrap();
    let b = perturbed(&base, 0.1, 1).unwrap();
    assert_eq!(a.to_text(), b.to_text());
    assert_ne!(a.to_text(), base.to_text());
    check_topology(&a);
    for v in 0..base.n_vertices() {
        if base.is_boundary_vertex(v) {
            assert_eq!(a.vertex(v), base.vertex(v));
        }
    }
}

#[test]
fn deep_vertices_get_higher_layers() {
    let m = appendix_hexagon().unwrap().refined(2).unwrap();
    let c = counts_and_layers(&m);
    let center = (0..m.n_vertices()).find(|&v| m.vertex(v) == Point2::new(0.5, 0.5)).unwrap();
    assert!(m.vertex_edges(center).iter().all(|&e| {
        let [a, b] = m.edge(e);
        !m.is_boundary_vertex(a) && !m.is_boundary_vertex(b)
    }));
    assert!(c.layer[center].unwrap() >= 2);
    assert!(c.number_of_layers >= 2);
}

#[test]
fn single_boundary_cell_breaks_the_cell_identity() {
    // a fan plus one cell with two boundary edges
    let v = vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
        Point2::new(0.4, 0.5),
        Point2::new(2.0, 0.5),
    ];
    let cells = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4], [1, 5, 2]];
    let m = Triangulation::new(v, cells).unwrap();
    check_topology(&m);
    let c = counts_and_layers(&m);
    assert_eq!((c.interior_cells, c.interior_vertices), (1, 1));
    assert!(!c.interior_cell_identity_holds());
    assert!(c.assumption1_violations.contains(&5));
}

#[test]
fn hexagon_patch_geometry() {
    let m = appendix_hexagon().unwrap();
    let p = vertex_patch(&m, 0).unwrap();
    assert_eq!(p.len(), 6);
    for i in 0..6 {
        let a = m.vertex(p.rim_at(i as isize - 1));
        let b = m.vertex(p.rim_at(i as isize));
        let c = m.vertex(p.rim_at(i as isize + 1));
        let area = divfree::geometry::signed_area(a, b, c);
        let want = area / (p.area_at(i as isize) + p.area_at(i as isize + 1));
        assert!((patch_geometry(&m, &p, i) - want).abs() < 1e-15);
    }
}

#[test]
fn regular_fan_has_equal_coefficients() {
    let mut v = vec![Point2::new(0.0, 0.0)];
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64;
        v.push(Point2::new(a.cos(), a.sin()));
    }
    let cells = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
    let m = Triangulation::new(v, cells).unwrap();
    let p = vertex_patch(&m, 0).unwrap();
    let s = m.cell_area(0);
    for i in 0..6 {
        let a = m.vertex(p.rim_at(i as isize - 1));
        let b = m.vertex(p.rim_at(i as isize));
        let c = m.vertex(p.rim_at(i as isize + 1));
        let want = divfree::geometry::signed_area(a, b, c) / (2.0 * s);
        assert!((patch_geometry(&m, &p, i) - want).abs() < 1e-14);
    }
}

#[test]
fn collinear_rim_gives_zero_coefficient() {
    let v = vec![
        Point2::new(0.0, 0.0),
        Point2::new(-1.0, -1.0),
        Point2::new(0.0, -1.0),
        Point2::new(1.0, -1.0),
        Point2::new(1.0, 1.0),
        Point2::new(-1.0, 1.0),
    ];
    let cells = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 5, 1]];
    let m = Triangulation::new(v, cells).unwrap();
    let p = vertex_patch(&m, 0).unwrap();
    let i = p.rim.iter().position(|&r| r == 2).unwrap();
    assert_eq!(patch_geometry(&m, &p, i), 0.0);
}

/// `d d sin(alpha + beta) / (2 (S + S'))` from explicit angles.
/// Also returns the factor in front of the sine.
fn trig_coefficient(m: &Triangulation, p: &divfree::patch::VertexPatch, i: usize) -> (f64, f64) {
    let i = i as isize;
    let o = m.vertex(p.center);
    let (a, b, c) = (
        m.vertex(p.rim_at(i - 1)),
        m.vertex(p.rim_at(i)),
        m.vertex(p.rim_at(i + 1)),
    );
    let angle = |u: Point2, v: Point2| (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
    let alpha = angle(o - b, a - b);
    let beta = angle(o - b, c - b);
    let scale = (a - b).norm() * (c - b).norm() / (2.0 * (p.area_at(i) + p.area_at(i + 1)));
    (scale * (alpha + beta).sin(), scale)
}

#[test]
fn round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    let m = generate_mesh(&"perturbed(appendix_hexagon,1,0.2,5)".parse::<MeshKind>().unwrap()).unwrap();
    m.write_file(&path).unwrap();
    let back = Triangulation::read_file(&path).unwrap();
    assert_eq!(back.to_text(), m.to_text());
    assert_eq!(back.vertices(), m.vertices());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn patches_are_closed_cycles(seed in 0u64..10_000, mag in 0.0f64..0.29) {
        let m = perturbed(&square_crisscross(2).unwrap().refine().unwrap(), mag, seed).unwrap();
        for v in m.interior_vertices() {
            let p = vertex_patch(&m, v).unwrap();
            let k = p.len();
            prop_assert!(k >= 3);
            prop_assert_eq!(p.cells[0], *m.vertex_cells(v).iter().min().unwrap());
            for i in 0..k {
                let (t, u) = (p.cells[i], p.cells[(i + 1) % k]);
                let shared: Vec<usize> = m.cell_edges(t).iter().copied().filter(|e| m.cell_edges(u).contains(e)).collect();
                prop_assert_eq!(shared, vec![p.spokes[i]]);
                let [a, b] = m.edge(p.rim_edges[i]);
                prop_assert!(a != v && b != v);
                prop_assert!(m.cell_edges(t).contains(&p.rim_edges[i]));
                // rim vertex i closes rim edges i and i + 1
                let [c, d] = m.edge(p.rim_edges[(i + 1) % k]);
                let r = p.rim[i];
                prop_assert!((a == r || b == r) && (c == r || d == r));
            }
        }
    }

    #[test]
    fn coefficient_matches_angle_formula(seed in 0u64..10_000, mag in 0.0f64..0.29) {
        let m = perturbed(&appendix_hexagon().unwrap().refined(2).unwrap(), mag, seed).unwrap();
        for v in m.interior_vertices() {
            let p = vertex_patch(&m, v).unwrap();
            for i in 0..p.len() {
                let c = patch_geometry(&m, &p, i);
                let (t, scale) = trig_coefficient(&m, &p, i);
                prop_assert!((c - t).abs() <= 1e-13 * scale, "{} vs {}", c, t);
            }
        }
    }

    #[test]
    fn refinement_preserves_area(seed in 0u64..10_000, mag in 0.0f64..0.29, n in 1usize..4) {
        let m = perturbed(&square_crisscross(n).unwrap(), mag, seed).unwrap();
        let r = m.refined(2).unwrap();
        prop_assert!((r.total_area() - m.total_area()).abs() <= 1e-13 * m.total_area());
        check_topology(&r);
        prop_assert_eq!(r.n_cells(), 16 * m.n_cells());
    }
}
