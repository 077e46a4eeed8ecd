//! Basis of the enriched linear space: one function per interior edge,
//! with divergence `1/S_1` on one adjacent cell and `-1/S_2` on the other,
//! plus the divergence-free cell functions of the kernel basis.

use crate::combination::{ColumnLabel, CombinationMatrix, VectorPieces};
use crate::dofmap::DofMap;
use crate::element::{w_edge, w_pair, y_pair};
use crate::error::{Error, Result};
use crate::geometry::{cos_angle, signed_area};
use crate::kernel::{frame, loc, psi_cell};
use crate::mesh::Triangulation;
use crate::patch::{cell_patch, check_assumption1};
use crate::poly::VectorPoly;

fn third(tri: &Triangulation, t: usize, a: usize, b: usize) -> usize {
    *tri.cell(t).iter().find(|&&v| v != a && v != b).expect("triangle has a third vertex")
}

fn edge(tri: &Triangulation, a: usize, b: usize) -> Result<usize> {
    tri.edge_between(a, b).ok_or(Error::OpenFan(a))
}

fn across(tri: &Triangulation, e: usize, t: usize) -> Result<usize> {
    tri.neighbor_across(e, t).ok_or(Error::NotInteriorCell(t))
}

/// Local generators of cell `t` addressed by global vertex ids.
struct Gens<'a> {
    tri: &'a Triangulation,
    t: usize,
    f: crate::poly::CellFrame,
}

impl<'a> Gens<'a> {
    fn new(tri: &'a Triangulation, t: usize) -> Self {
        Gens { tri, t, f: frame(tri, t) }
    }

    /// `w_{T,e}` for the edge opposite vertex `v`.
    fn w_opp(&self, v: usize) -> VectorPoly {
        w_edge(&self.f, loc(self.tri, self.t, v))
    }

    /// `curl(l_v^2)`.
    fn w_at(&self, v: usize) -> VectorPoly {
        w_pair(&self.f, loc(self.tri, self.t, v))
    }

    fn y_at(&self, v: usize) -> VectorPoly {
        y_pair(&self.f, loc(self.tri, self.t, v))
    }
}

/// The two cells of interior edge `a`-`b`: first the one traversing
/// `a -> b` counterclockwise, then the other.
fn split_cells(tri: &Triangulation, e: usize, a: usize, b: usize) -> (usize, usize) {
    let [t1, t2] = tri.edge_cells(e);
    let c = tri.cell(t1);
    let i = tri.local_index(t1, a).unwrap();
    if c[(i + 1) % 3] == b {
        (t1, t2)
    } else {
        (t2, t1)
    }
}

/// Edge function for an interior edge with exactly one boundary endpoint.
fn psi_edge_one_boundary(tri: &Triangulation, e: usize, a1: usize, a3: usize) -> Result<VectorPieces> {
    let x = |v: usize| tri.vertex(v);
    let (t1, t2) = split_cells(tri, e, a3, a1);
    let a2 = third(tri, t1, a1, a3);
    let a4 = third(tri, t2, a1, a3);
    let e1 = edge(tri, a1, a2)?;
    let e4 = edge(tri, a1, a4)?;
    let t3 = across(tri, e1, t1)?;
    let t4 = across(tri, e4, t2)?;
    let [s1, s2, s3, s4] = [t1, t2, t3, t4].map(|t| tri.cell_area(t));
    let d1 = (x(a1) - x(a2)).norm();
    let d2 = (x(a2) - x(a3)).norm();
    let d3 = (x(a3) - x(a4)).norm();
    let d4 = (x(a1) - x(a4)).norm();
    let ce = (signed_area(x(a2), x(a3), x(a4)) - (s1 + s2)) / (s1 + s2);
    let r3 = s3 / (s3 + s1);
    let r4 = s4 / (s4 + s2);
    let mut out = VectorPieces::new();
    out.add(t3, Gens::new(tri, t3).w_opp(third(tri, t3, a1, a2)) * r3);
    out.add(t4, Gens::new(tri, t4).w_opp(third(tri, t4, a1, a4)) * r4);
    let g1 = Gens::new(tri, t1);
    out.add(
        t1,
        g1.y_at(a1)
            + g1.w_at(a1) * (d1 * cos_angle(x(a1), x(a2), x(a3)) / d2)
            + g1.w_opp(a3) * r3
            + g1.w_opp(a2) * ce,
    );
    let g2 = Gens::new(tri, t2);
    out.add(
        t2,
        -g2.y_at(a1)
            + g2.w_at(a1) * (d4 * cos_angle(x(a1), x(a4), x(a3)) / d3)
            + g2.w_opp(a3) * r4
            + g2.w_opp(a4) * ce,
    );
    Ok(out)
}

/// Edge function for an interior edge `a1`-`a3` with two interior
/// endpoints; `a1` is the lower index.
fn psi_edge_interior(tri: &Triangulation, e: usize, a1: usize, a3: usize) -> Result<VectorPieces> {
    let x = |v: usize| tri.vertex(v);
    let (t1, t2) = split_cells(tri, e, a3, a1);
    let a2 = third(tri, t1, a1, a3);
    let a4 = third(tri, t2, a1, a3);
    let t3 = across(tri, edge(tri, a1, a2)?, t1)?;
    let t4 = across(tri, edge(tri, a1, a4)?, t2)?;
    let t6 = across(tri, edge(tri, a2, a3)?, t1)?;
    let t5 = across(tri, edge(tri, a3, a4)?, t2)?;
    let [s1, s2, s3, s4, s5, s6] = [t1, t2, t3, t4, t5, t6].map(|t| tri.cell_area(t));
    let d = (x(a1) - x(a3)).norm();
    let d2 = (x(a2) - x(a3)).norm();
    let d4 = (x(a1) - x(a4)).norm();
    let ce = (signed_area(x(a2), x(a3), x(a4)) - signed_area(x(a4), x(a1), x(a2))) / (2.0 * (s1 + s2));
    let r3 = s3 / (2.0 * (s3 + s1));
    let r4 = s4 / (2.0 * (s4 + s2));
    let r5 = s5 / (2.0 * (s5 + s2));
    let r6 = s6 / (2.0 * (s6 + s1));
    let mut out = VectorPieces::new();
    out.add(t3, Gens::new(tri, t3).w_opp(third(tri, t3, a1, a2)) * r3);
    out.add(t4, Gens::new(tri, t4).w_opp(third(tri, t4, a1, a4)) * r4);
    out.add(t5, Gens::new(tri, t5).w_opp(third(tri, t5, a3, a4)) * -r5);
    out.add(t6, Gens::new(tri, t6).w_opp(third(tri, t6, a2, a3)) * -r6);
    let g1 = Gens::new(tri, t1);
    out.add(
        t1,
        g1.w_opp(a3) * (r3 - 1.0)
            + g1.w_opp(a1) * (1.0 - r6)
            + g1.w_opp(a2) * ce
            + g1.w_at(a2) * (d2 * cos_angle(x(a1), x(a3), x(a2)) / d - 0.5)
            + g1.w_at(a1) * 0.5
            - g1.w_at(a3) * 0.5
            + g1.y_at(a2),
    );
    let g2 = Gens::new(tri, t2);
    out.add(
        t2,
        g2.w_opp(a3) * (r4 - 1.0)
            + g2.w_opp(a1) * (1.0 - r5)
            + g2.w_opp(a4) * ce
            + g2.w_at(a4) * (0.5 - d4 * cos_angle(x(a3), x(a1), x(a4)) / d)
            + g2.w_at(a1) * 0.5
            - g2.w_at(a3) * 0.5
            - g2.y_at(a4),
    );
    Ok(out)
}

/// Endpoints `(a1, a3)` of the edge function on `e`: the interior endpoint
/// first when the other is on the boundary, else the lower index first.
pub fn edge_orientation(tri: &Triangulation, e: usize) -> Result<(usize, usize)> {
    let [a, b] = tri.edge(e);
    match (tri.is_boundary_vertex(a), tri.is_boundary_vertex(b)) {
        (true, true) => Err(Error::BoundaryChord { edge: e }),
        (true, false) => Ok((b, a)),
        _ => Ok((a, b)),
    }
}

/// Pieces of the edge function of interior edge `e`. Outer neighbours that
/// coincide simply accumulate their contributions on the shared cell.
pub fn psi_edge(tri: &Triangulation, e: usize) -> Result<VectorPieces> {
    if tri.is_boundary_edge(e) {
        return Err(Error::InvalidParameter(format!("edge {e} is on the boundary")));
    }
    let (a1, a3) = edge_orientation(tri, e)?;
    if tri.is_boundary_vertex(a3) {
        psi_edge_one_boundary(tri, e, a1, a3)
    } else {
        psi_edge_interior(tri, e, a1, a3)
    }
}

/// The two cells adjacent to `e` ordered so the edge function has
/// divergence `1/S` on the first and `-1/S` on the second.
pub fn edge_div_cells(tri: &Triangulation, e: usize) -> Result<(usize, usize)> {
    let (a1, a3) = edge_orientation(tri, e)?;
    Ok(split_cells(tri, e, a3, a1))
}

/// Interior edges in index order, then interior cells in index order.
pub fn build_el_basis(tri: &Triangulation, dofmap: &DofMap) -> Result<CombinationMatrix> {
    check_assumption1(tri)?;
    let mut cols = Vec::new();
    for e in tri.interior_edges() {
        cols.push((ColumnLabel::Edge(e), psi_edge(tri, e)?));
    }
    for t in tri.interior_cells() {
        cols.push((ColumnLabel::Cell(t), psi_cell(tri, &cell_patch(tri, t)?)));
    }
    CombinationMatrix::from_pieces(tri, dofmap, cols)
}
