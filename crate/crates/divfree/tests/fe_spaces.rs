mod common;

use common::max_abs;
use divfree::assembly::{assemble_div, reduce_columns, velocity_error, FnVectorField, PressureKind};
use divfree::combination::{pieces_to_dofs, ColumnLabel, CombinationMatrix, VectorPieces};
use divfree::dofmap::DofMap;
use divfree::el::{build_el_basis, edge_div_cells, edge_orientation};
use divfree::element::{dof_values, nodal_basis, w_edge, w_pair, Orientation};
use divfree::field::{cell_field, evaluate_field, interpolate, verify_el_membership};
use divfree::generate::{appendix_hexagon, perturbed, square_crisscross};
use divfree::kernel::{build_kernel_basis, independence_matrix, patch_divergence_matrix, psi_vertex_spoke_dofs};
use divfree::p1div::{build_p1div_space, hat, third_mode};
use divfree::patch::{counts_and_layers, patch_geometry, vertex_patch};
use divfree::poly::{CellFrame, ScalarPoly, VectorPoly};
use divfree::sparse::{self, to_dense};
use divfree::{Point2, Triangulation};
use faer::{linalg::solvers::SolveLstsqCore, Mat};
use proptest::prelude::*;

fn nullspace(a: &Mat<f64>, tol: f64) -> Mat<f64> {
    let svd = a.svd().unwrap();
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let rank = (0..s.nrows()).filter(|&i| s[i] > tol * smax).count();
    svd.V().subcols(rank, a.ncols() - rank).to_owned()
}

fn rank(a: &Mat<f64>, tol: f64) -> usize {
    let s = a.singular_values().unwrap();
    let smax = s.iter().fold(0.0f64, |m, &x| m.max(x));
    s.iter().filter(|&&x| x > tol * smax).count()
}

fn centroid(tri: &Triangulation, t: usize) -> Point2 {
    let [a, b, c] = tri.cell_points(t);
    (a + b + c) * (1.0 / 3.0)
}

fn dofs_of(tri: &Triangulation, dm: &DofMap, pieces: &VectorPieces) -> Vec<f64> {
    let mut x = vec![0.0; dm.dim()];
    for (i, v) in pieces_to_dofs(tri, dm, pieces).0 {
        x[i] = v;
    }
    x
}

#[test]
fn space_dimensions() {
    let hex = appendix_hexagon().unwrap();
    assert_eq!(DofMap::new(&hex).dim(), 18);
    let r = hex.refine().unwrap();
    let dm = DofMap::new(&r);
    assert_eq!(dm.dim(), 90);
    assert_eq!(build_kernel_basis(&hex, &DofMap::new(&hex)).unwrap().n_cols(), 1);
    assert_eq!(build_kernel_basis(&r, &dm).unwrap().n_cols(), 90 - (3 * 24 - 1));
    let single = Triangulation::new(
        vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    assert_eq!(DofMap::new(&single).dim(), 0);
}

#[test]
fn dimension_identities_on_the_suite() {
    for (name, m) in common::suite() {
        let c = counts_and_layers(&m);
        let dm = DofMap::new(&m);
        assert_eq!(dm.dim(), 3 * c.interior_edges);
        let k = build_kernel_basis(&m, &dm).unwrap();
        assert_eq!(k.n_cols(), c.interior_vertices + c.interior_cells, "{name}");
        assert_eq!(k.n_cols(), dm.dim() - (3 * c.cells - 1), "{name}");
        let el = build_el_basis(&m, &dm).unwrap();
        assert_eq!(el.n_cols(), c.interior_edges + c.interior_cells, "{name}");
        for cm in [&k, &el] {
            assert!(cm.consistency < 1e-12, "{name}: {}", cm.consistency);
            for j in 0..cm.n_cols() {
                assert!(!sparse::column(&cm.matrix, j).is_empty());
            }
        }
    }
}

#[test]
fn kernel_columns_are_divergence_free() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let k = build_kernel_basis(&m, &dm).unwrap();
        let b = assemble_div(&m, &dm, PressureKind::P1);
        let bk = sparse::product(&b.matrix, &k.matrix).unwrap();
        let scale = sparse::max_abs(&b.matrix) * sparse::max_abs(&k.matrix);
        assert!(sparse::max_abs(&bk) < 1e-12 * scale, "{name}: {:e}", sparse::max_abs(&bk) / scale);
    }
}

#[test]
fn column_supports_match_patches() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let k = build_kernel_basis(&m, &dm).unwrap();
        for (j, label) in k.labels.iter().enumerate() {
            let mut want: Vec<usize> = match *label {
                ColumnLabel::Vertex(v) => vertex_patch(&m, v).unwrap().cells,
                ColumnLabel::Cell(t) => {
                    let mut s = vec![t];
                    for e in m.cell_edges(t) {
                        s.push(m.neighbor_across(e, t).unwrap());
                    }
                    s
                }
                _ => panic!("{name}: unexpected label {label}"),
            };
            want.sort_unstable();
            assert_eq!(k.supports[j], want, "{name} {label}");
            let edges: Vec<usize> = want.iter().flat_map(|&t| m.cell_edges(t)).collect();
            for (i, _) in sparse::column(&k.matrix, j) {
                assert!(edges.contains(&dm.dof_edge(i).0), "{name} {label}");
            }
        }
    }
}

#[test]
fn vertex_functions_follow_the_rim_coefficients() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let k = build_kernel_basis(&m, &dm).unwrap();
        for v in m.interior_vertices() {
            let p = vertex_patch(&m, v).unwrap();
            let x = k.column_dense(k.position(ColumnLabel::Vertex(v)).unwrap());
            for (i, &t) in p.cells.iter().enumerate() {
                let f = CellFrame::new(m.cell_points(t));
                let gens = [w_pair(&f, 0), w_pair(&f, 1), w_pair(&f, 2), w_edge(&f, 0), w_edge(&f, 1), w_edge(&f, 2)];
                let g = Mat::from_fn(9, 6, |r, c| dof_values(&f, Orientation::LOCAL, &gens[c])[r]);
                let d = dm.gather_local(&m, t, &x);
                let mut sol = Mat::from_fn(9, 1, |r, _| d[r]);
                g.qr().solve_lstsq_in_place_with_conj(faer::Conj::No, sol.as_mut());
                let local = |w: usize| m.local_index(t, w).unwrap();
                let prev = p.rim_at(i as isize - 1);
                // the spoke to rim vertex i lies opposite the previous rim vertex
                assert!((sol[(3 + local(prev), 0)] - patch_geometry(&m, &p, i)).abs() < 1e-12, "{name}");
                assert!((sol[(local(v), 0)] - 1.0).abs() < 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn representation_identity() {
    let mut meshes = common::suite();
    meshes.push(("hexagon/0".into(), appendix_hexagon().unwrap()));
    for (name, m) in meshes {
        let dm = DofMap::new(&m);
        let k = build_kernel_basis(&m, &dm).unwrap();
        let el = build_el_basis(&m, &dm).unwrap();
        let col = |l: ColumnLabel| el.column_dense(el.position(l).unwrap());
        for v in m.interior_vertices() {
            let p = vertex_patch(&m, v).unwrap();
            let mut r = k.column_dense(k.position(ColumnLabel::Vertex(v)).unwrap());
            let mut sub = |x: Vec<f64>, s: f64| {
                for (a, b) in r.iter_mut().zip(x) {
                    *a -= s * b;
                }
            };
            for &e in &p.spokes {
                let sign = if edge_orientation(&m, e).unwrap().0 == v { 1.0 } else { -1.0 };
                sub(col(ColumnLabel::Edge(e)), sign);
            }
            let n = p.len();
            for i in 0..n {
                if !m.is_boundary_vertex(p.rim[i]) {
                    sub(col(ColumnLabel::Cell(p.cells[i])), 0.5);
                    sub(col(ColumnLabel::Cell(p.cells[(i + 1) % n])), 0.5);
                }
            }
            assert!(max_abs(&r) < 1e-12, "{name}, vertex {v}: {:e}", max_abs(&r));
        }
    }
}

#[test]
fn independence_determinants() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let k = build_kernel_basis(&m, &dm).unwrap();
        let mut checked = 0;
        for t in m.interior_cells() {
            if let Some(c) = independence_matrix(&m, &dm, &k, t).unwrap() {
                assert!(c.fit_residual < 1e-12, "{name}, cell {t}");
                let rel = (c.determinant - c.expected).abs() / c.expected.abs();
                assert!(rel < 1e-12, "{name}, cell {t}: {:e}", rel);
                checked += 1;
            }
        }
        assert!(checked > 0, "{name}");
    }
}

#[test]
fn kernel_basis_spans_the_discrete_kernel() {
    let meshes = [
        appendix_hexagon().unwrap().refine().unwrap(),
        perturbed(&appendix_hexagon().unwrap().refine().unwrap(), 0.2, 9).unwrap(),
        square_crisscross(2).unwrap(),
    ];
    for m in &meshes {
        let dm = DofMap::new(m);
        let k = build_kernel_basis(m, &dm).unwrap();
        let b = to_dense(&assemble_div(m, &dm, PressureKind::P1).matrix);
        let z = nullspace(&b, 1e-11);
        assert_eq!(z.ncols(), k.n_cols());
        let kd = to_dense(&k.matrix);
        assert_eq!(rank(&kd, 1e-10), k.n_cols());
        let coef = divfree::linalg::random_vector(z.ncols(), 17);
        let target = &z * Mat::from_fn(z.ncols(), 1, |i, _| coef[i]);
        let mut sol = target.clone();
        kd.qr().solve_lstsq_in_place_with_conj(faer::Conj::No, sol.as_mut());
        let fit = &kd * sol.subrows(0, k.n_cols()) - &target;
        assert!(fit.norm_l2() < 1e-10 * target.norm_l2(), "{:e}", fit.norm_l2());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn patch_kernel_is_one_dimensional(seed in 0u64..100_000, mag in 0.0f64..0.29, pick in 0usize..1000) {
        let m = perturbed(&appendix_hexagon().unwrap().refined(2).unwrap(), mag, seed).unwrap();
        let inner: Vec<usize> = m.interior_vertices().collect();
        let v = inner[pick % inner.len()];
        let p = vertex_patch(&m, v).unwrap();
        let z = nullspace(&patch_divergence_matrix(&m, &p), 1e-10);
        prop_assert_eq!(z.ncols(), 1);
        let psi = psi_vertex_spoke_dofs(&m, &p);
        let n = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = (0..psi.len()).map(|i| psi[i] * z[(i, 0)]).sum::<f64>() / n;
        // sine of the angle, from the orthogonal remainder
        let angle = (0..psi.len()).map(|i| (psi[i] / n - c * z[(i, 0)]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(angle < 1e-8, "angle {:e}", angle);
    }

    #[test]
    fn linear_fields_are_reproduced(c in prop::array::uniform6(-2.0f64..2.0), seed in 0u64..1000) {
        let m = perturbed(&square_crisscross(2).unwrap(), 0.2, seed).unwrap();
        let field = |p: Point2| Point2::new(c[0] + c[1] * p.x + c[2] * p.y, c[3] + c[4] * p.x + c[5] * p.y);
        for t in 0..m.n_cells() {
            let f = CellFrame::new(m.cell_points(t));
            let o = Orientation::global(&m, t);
            let d = divfree::element::dof_values_of_field(&f, o, divfree::quadrature::edge_degree11(), field);
            let basis = nodal_basis(&f, o);
            let mut v = VectorPoly::zero();
            for a in 0..9 {
                v += basis[a].scale(d[a]);
            }
            for l in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [0.0, 0.5, 0.5], [1.0 / 3.0; 3]] {
                let e = v.eval(l) - field(f.point_at(l));
                prop_assert!(e.norm() < 1e-12);
            }
        }
    }
}

#[test]
fn interior_cells_keep_linear_fields_after_interpolation() {
    let m = appendix_hexagon().unwrap().refined(2).unwrap();
    let dm = DofMap::new(&m);
    let field = |p: Point2| Point2::new(p.x + p.y, 2.0 * p.x - p.y);
    let x = interpolate(&m, &dm, &field);
    let mut seen = 0;
    for t in m.interior_cells() {
        let (f, v) = cell_field(&m, &dm, &x.values, t);
        let g = v.grad(&f);
        let at = [1.0 / 3.0; 3];
        assert!((g[0][0].eval(at) - 1.0).abs() < 1e-12 && (g[0][1].eval(at) - 1.0).abs() < 1e-12);
        assert!((g[1][0].eval(at) - 2.0).abs() < 1e-12 && (g[1][1].eval(at) + 1.0).abs() < 1e-12);
        assert!((v.eval(at) - field(f.point_at(at))).norm() < 1e-12);
        seen += 1;
    }
    assert!(seen > 0);
}

#[test]
fn interpolation_rates() {
    use std::f64::consts::PI;
    let field = |p: Point2| {
        let s = (PI * p.x).sin() * (PI * p.y).sin();
        Point2::new(s, s)
    };
    let grad = |p: Point2| {
        let g = Point2::new(PI * (PI * p.x).cos() * (PI * p.y).sin(), PI * (PI * p.x).sin() * (PI * p.y).cos());
        [g, g]
    };
    let exact = FnVectorField(field, grad);
    let mut errs = Vec::new();
    for l in 1..5 {
        let m = square_crisscross(2).unwrap().refined(l).unwrap();
        let dm = DofMap::new(&m);
        let x = interpolate(&m, &dm, &field);
        let e = velocity_error(&m, &dm, &x.values, &exact);
        errs.push((e.l2, e.h1_semi));
    }
    for w in errs.windows(2).skip(1) {
        let (r0, r1) = (common::rate(w[0].0, w[1].0), common::rate(w[0].1, w[1].1));
        assert!((r0 - 2.0).abs() < 0.1, "L2 rate {r0}");
        assert!((r1 - 1.0).abs() < 0.1, "H1 rate {r1}");
    }
}

#[test]
fn el_divergence_pattern() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let el = build_el_basis(&m, &dm).unwrap();
        let b = reduce_columns(&assemble_div(&m, &dm, PressureKind::P0), &el).unwrap();
        for (j, label) in el.labels.iter().enumerate() {
            let mut col = sparse::column(&b.matrix, j);
            col.retain(|&(_, v)| v.abs() > 1e-12);
            match *label {
                ColumnLabel::Edge(e) => {
                    let (tp, tm) = edge_div_cells(&m, e).unwrap();
                    assert_eq!(col.len(), 2, "{name} {label}");
                    for (t, v) in col {
                        let want = if t == tp { 1.0 } else if t == tm { -1.0 } else { f64::NAN };
                        assert!((v - want).abs() < 1e-12, "{name} {label}: {v}");
                    }
                    let (_, d) = evaluate_field(&m, &dm, &el.column_dense(j), centroid(&m, tp)).unwrap();
                    assert!((d - 1.0 / m.cell_area(tp)).abs() < 1e-10 / m.cell_area(tp));
                }
                ColumnLabel::Cell(_) => assert!(col.is_empty(), "{name} {label}"),
                _ => panic!("unexpected label"),
            }
        }
    }
}

#[test]
fn el_membership() {
    for (name, m) in common::suite() {
        let dm = DofMap::new(&m);
        let el = build_el_basis(&m, &dm).unwrap();
        let mut sum = vec![0.0; dm.dim()];
        for j in 0..el.n_cols() {
            let x = el.column_dense(j);
            let r = verify_el_membership(&m, &dm, &x);
            assert!(r.max() < 1e-12, "{name} {}: {r:?}", el.labels[j]);
            for (s, v) in sum.iter_mut().zip(&x) {
                *s += v;
            }
        }
        assert!(verify_el_membership(&m, &dm, &sum).max() < 1e-12, "{name}");
        let mut raw = vec![0.0; dm.dim()];
        raw[0] = 1.0;
        assert!(verify_el_membership(&m, &dm, &raw).div_constancy > 1e-3, "{name}");
    }
}

#[test]
fn p1_space_on_structured_meshes() {
    for (name, m) in common::structured() {
        let dm = DofMap::new(&m);
        let p1 = build_p1div_space(&m, &dm).unwrap();
        assert_eq!(p1.n_cols(), 3 * m.interior_vertices().count(), "{name}");
        assert_eq!(rank(&to_dense(&p1.matrix), 1e-10), p1.n_cols(), "{name}");
        for j in 0..p1.n_cols() {
            assert!(verify_el_membership(&m, &dm, &p1.column_dense(j)).max() < 1e-12, "{name}");
        }
    }
}

#[test]
fn p1_space_reports_missing_third_modes() {
    // a generic perturbation leaves only the two hats on a patch
    for (name, m) in common::perturbed_suite() {
        let err = build_p1div_space(&m, &DofMap::new(&m)).unwrap_err();
        assert!(matches!(err, divfree::Error::P1DivNullity { dim: 2, .. }), "{name}: {err}");
    }
}

#[test]
fn el_basis_has_full_column_rank() {
    for m in [appendix_hexagon().unwrap().refine().unwrap(), square_crisscross(2).unwrap()] {
        let dm = DofMap::new(&m);
        let el = build_el_basis(&m, &dm).unwrap();
        assert_eq!(rank(&to_dense(&el.matrix), 1e-10), el.n_cols());
    }
}

#[test]
fn vertex_function_on_the_initial_hexagon_is_the_sum_of_edge_functions() {
    let m = appendix_hexagon().unwrap();
    let dm = DofMap::new(&m);
    let k = build_kernel_basis(&m, &dm).unwrap();
    let el = build_el_basis(&m, &dm).unwrap();
    let sum = el.expand(&vec![1.0; el.n_cols()]);
    let d: Vec<f64> = k.column_dense(0).iter().zip(&sum).map(|(a, b)| a - b).collect();
    assert!(max_abs(&d) < 1e-12);
}

#[test]
fn kernel_fields_vanish_outside_their_support() {
    let m = appendix_hexagon().unwrap().refined(2).unwrap();
    let dm = DofMap::new(&m);
    let k = build_kernel_basis(&m, &dm).unwrap();
    for j in 0..k.n_cols() {
        let x = k.column_dense(j);
        for t in 0..m.n_cells() {
            let (v, d) = evaluate_field(&m, &dm, &x, centroid(&m, t)).unwrap();
            assert!(d.abs() < 1e-10, "div {d}");
            if !k.supports[j].contains(&t) {
                assert_eq!(v, Point2::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn p1_hats_interpolate_global_hat_fields() {
    let m = appendix_hexagon().unwrap().refined(2).unwrap();
    let dm = DofMap::new(&m);
    let p1 = build_p1div_space(&m, &dm).unwrap();
    for v in m.interior_vertices() {
        for (mode, e) in [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)].into_iter().enumerate() {
            let field = |p: Point2| match m.locate(p) {
                Some(t) => match m.local_index(t, v) {
                    Some(i) => e * m.barycentric(t, p)[i],
                    None => Point2::new(0.0, 0.0),
                },
                None => Point2::new(0.0, 0.0),
            };
            let x = interpolate(&m, &dm, &field);
            let col = p1.column_dense(p1.position(ColumnLabel::VertexMode { vertex: v, mode }).unwrap());
            let d: Vec<f64> = x.values.iter().zip(&col).map(|(a, b)| a - b).collect();
            assert!(max_abs(&d) < 1e-12);
            assert_eq!(dofs_of(&m, &dm, &hat(&m, v, e)), col);
        }
    }
}

#[test]
fn appendix_third_mode_matches_the_explicit_field() {
    let m = appendix_hexagon().unwrap();
    let dm = DofMap::new(&m);
    let p = vertex_patch(&m, 0).unwrap();
    let mode = third_mode(&m, &dm, &p).unwrap();
    let hx = dofs_of(&m, &dm, &hat(&m, 0, Point2::new(1.0, 0.0)));
    let hy = dofs_of(&m, &dm, &hat(&m, 0, Point2::new(0.0, 1.0)));
    // third mode in global DOFs
    let mut z = vec![0.0; dm.dim()];
    for (s, &e) in p.spokes.iter().enumerate() {
        let b = dm.edge_base(e).unwrap();
        z[b..b + 3].copy_from_slice(&mode[3 * s..3 * s + 3]);
    }
    // per cell: a phi^1 + b phi^2 plus the signed rim difference term; the
    // labelling of cells and rim vertices is searched over all rotations
    // and reflections
    let ab = [(1.0, -2.0), (1.0, -1.0), (2.0, -1.0), (1.0, -2.0), (1.0, -1.0), (2.0, -1.0)];
    let third = [(1.0, 0.0), (-1.0, -1.0), (0.0, 1.0), (1.0, 0.0), (-1.0, -1.0), (0.0, 1.0)];
    let mut found = false;
    for start in 0..6 {
        for flip in [false, true] {
            let label = |i: usize| if flip { (start + 6 - i) % 6 } else { (start + i) % 6 };
            let mut pieces = VectorPieces::new();
            for (pos, &t) in p.cells.iter().enumerate() {
                // rim vertices of this cell
                let (r0, r1) = (p.rim_at(pos as isize - 1), p.rim[pos]);
                let i = (0..6).find(|&i| {
                    let (a, b) = (label(i), label((i + 5) % 6));
                    let (ra, rb) = (p.rim[a], p.rim[b]);
                    (ra == r1 && rb == r0) || (ra == r0 && rb == r1)
                });
                let Some(i) = i else { continue };
                // A_{i-1} and A_i of cell T_i in this labelling
                let (prev, cur) = (p.rim[label((i + 5) % 6)], p.rim[label(i)]);
                let l = |w: usize| ScalarPoly::lambda(m.local_index(t, w).unwrap());
                let o = l(0);
                let diff = l(prev) - l(cur);
                let (a, b) = ab[i];
                let (u, w) = third[i];
                let v = VectorPoly::times_vector(o, Point2::new(a, b))
                    + VectorPoly::times_vector(diff, Point2::new(u, w));
                pieces.add(t, v);
            }
            if pieces.cells.len() != 6 {
                continue;
            }
            let (entries, resid) = pieces_to_dofs(&m, &dm, &pieces);
            if resid > 1e-12 {
                continue;
            }
            let mut x = vec![0.0; dm.dim()];
            for (i, v) in entries {
                x[i] = v;
            }
            // x must lie in span{hx, hy, z} with a nonzero z component
            let a = Mat::from_fn(dm.dim(), 3, |i, j| [hx[i], hy[i], z[i]][j]);
            let mut sol = Mat::from_fn(dm.dim(), 1, |i, _| x[i]);
            a.qr().solve_lstsq_in_place_with_conj(faer::Conj::No, sol.as_mut());
            let c = sol.subrows(0, 3).to_owned();
            let fit = &a * &c - Mat::from_fn(dm.dim(), 1, |i, _| x[i]);
            if fit.norm_l2() < 1e-12 * max_abs(&x).max(1.0) && c[(2, 0)].abs() > 1e-6 {
                found = true;
            }
        }
    }
    assert!(found, "no labelling of the explicit third mode is continuous and in the local space");
}

#[test]
fn combination_matrix_exports_coordinates() {
    let m = appendix_hexagon().unwrap();
    let dm = DofMap::new(&m);
    let k: CombinationMatrix = build_kernel_basis(&m, &dm).unwrap();
    let mut out = Vec::new();
    k.write_coo(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("# column 0: vertex 0"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, sparse::triplets(&k.matrix).len());
}
