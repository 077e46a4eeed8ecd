//! Interpolation into sBDFM, point evaluation and conformity checks of
//! discrete fields.

use std::fmt;

use crate::assembly::cell_basis;
use crate::dofmap::DofMap;
use crate::element::{dof_values, dof_values_of_field, Orientation, NDOF};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::Triangulation;
use crate::poly::{CellFrame, VectorPoly};
use crate::quadrature::{edge_degree11, triangle_degree6};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    Sbdfm,
    Kernel,
    El,
    P1Div,
    PressureP1,
    PressureP0,
    Potential,
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceTag::Sbdfm => "sbdfm",
            SpaceTag::Kernel => "kernel",
            SpaceTag::El => "el",
            SpaceTag::P1Div => "p1div",
            SpaceTag::PressureP1 => "pressure_p1",
            SpaceTag::PressureP0 => "pressure_p0",
            SpaceTag::Potential => "v2plus-potential",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub tag: SpaceTag,
    pub values: Vec<f64>,
}

impl FieldCoefficients {
    /// Checks the length against the dimension of the tagged space.
    pub fn new(tag: SpaceTag, values: Vec<f64>, dim: usize) -> Result<FieldCoefficients> {
        if values.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a {tag} space of dimension {dim}",
                values.len()
            )));
        }
        Ok(FieldCoefficients { tag, values })
    }
}

/// `Pi_h field`: edge moments by Gauss quadrature; boundary DOFs dropped.
pub fn interpolate(tri: &Triangulation, dofmap: &DofMap, field: &dyn Fn(Point2) -> Point2) -> FieldCoefficients {
    let mut x = vec![0.0; dofmap.dim()];
    for &e in dofmap.interior_edges() {
        let t = tri.edge_cells(e)[0];
        let i = tri.cell_edges(t).iter().position(|&f| f == e).expect("edge of its cell");
        let f = CellFrame::new(tri.cell_points(t));
        let d = dof_values_of_field(&f, Orientation::global(tri, t), edge_degree11(), field);
        let base = dofmap.edge_base(e).expect("interior edge");
        x[base..base + 3].copy_from_slice(&d[3 * i..3 * i + 3]);
    }
    FieldCoefficients {
        tag: SpaceTag::Sbdfm,
        values: x,
    }
}

/// The polynomial of an sBDFM field on cell `t`.
pub fn cell_field(tri: &Triangulation, dofmap: &DofMap, x: &[f64], t: usize) -> (CellFrame, VectorPoly) {
    let (f, basis) = cell_basis(tri, t);
    let c = dofmap.gather(tri, t, x);
    let mut v = VectorPoly::zero();
    for a in 0..NDOF {
        if c[a] != 0.0 {
            v += basis[a].scale(c[a]);
        }
    }
    (f, v)
}

/// Value and elementwise divergence of an sBDFM field at `p`. Derived-space
/// coefficients are expanded with their combination matrix first.
pub fn evaluate_field(tri: &Triangulation, dofmap: &DofMap, x: &[f64], p: Point2) -> Result<(Point2, f64)> {
    let t = tri.locate(p).ok_or(Error::PointOutside { x: p.x, y: p.y })?;
    let (f, v) = cell_field(tri, dofmap, x, t);
    let l = tri.barycentric(t, p);
    Ok((v.eval(l), v.div(&f).eval(l)))
}

/// Largest relative violations of the enriched-linear conformity
/// conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElMembership {
    /// Deviation of the divergence from its cell mean, relative to the
    /// largest gradient entry.
    pub div_constancy: f64,
    /// Deviation of the normal trace from linear along each edge.
    pub normal_linearity: f64,
    /// Jump of the three edge moments across interior edges.
    pub continuity: f64,
    /// Edge moments on boundary edges.
    pub boundary: f64,
}

impl ElMembership {
    pub fn max(&self) -> f64 {
        self.div_constancy
            .max(self.normal_linearity)
            .max(self.continuity)
            .max(self.boundary)
    }
}

/// Checks whether the sBDFM field `x` lies in the enriched linear space.
pub fn verify_el_membership(tri: &Triangulation, dofmap: &DofMap, x: &[f64]) -> ElMembership {
    let rule = triangle_degree6();
    let samples = [0.0, 0.2, 0.5, 0.7, 1.0];
    let mut moments: Vec<Vec<[f64; 3]>> = vec![Vec::new(); tri.n_edges()];
    let (mut div_dev, mut div_scale) = (0.0f64, 0.0f64);
    let (mut lin_dev, mut vn_scale) = (0.0f64, 0.0f64);
    for t in 0..tri.n_cells() {
        let (f, v) = cell_field(tri, dofmap, x, t);
        let d = v.div(&f);
        let g = v.grad(&f);
        let vals: Vec<f64> = rule.points.iter().map(|&l| d.eval(l)).collect();
        let mean: f64 = vals.iter().zip(&rule.weights).map(|(v, w)| v * w).sum();
        for (v, &l) in vals.iter().zip(&rule.points) {
            div_dev = div_dev.max((v - mean).abs());
            for c in g.iter().flatten() {
                div_scale = div_scale.max(c.eval(l).abs());
            }
        }
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let at = |s: f64| {
                let mut l = [0.0; 3];
                l[j] = 1.0 - s;
                l[k] = s;
                v.eval(l).dot(f.normal[i])
            };
            let (a, b) = (at(0.0), at(1.0));
            for &s in &samples {
                let vn = at(s);
                vn_scale = vn_scale.max(vn.abs());
                lin_dev = lin_dev.max((vn - ((1.0 - s) * a + s * b)).abs());
            }
        }
        let m = dof_values(&f, Orientation::global(tri, t), &v);
        for (i, &e) in tri.cell_edges(t).iter().enumerate() {
            moments[e].push([m[3 * i], m[3 * i + 1], m[3 * i + 2]]);
        }
    }
    let scale = moments
        .iter()
        .flatten()
        .flat_map(|m| m.iter())
        .fold(0.0f64, |s, v| s.max(v.abs()));
    let (mut jump, mut bdry) = (0.0f64, 0.0f64);
    for (e, m) in moments.iter().enumerate() {
        if tri.is_boundary_edge(e) {
            for v in m.iter().flatten() {
                bdry = bdry.max(v.abs());
            }
        } else if m.len() == 2 {
            for r in 0..3 {
                jump = jump.max((m[0][r] - m[1][r]).abs());
            }
        }
    }
    let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { 0.0 };
    ElMembership {
        div_constancy: rel(div_dev, div_scale),
        normal_linearity: rel(lin_dev, vn_scale),
        continuity: rel(jump, scale),
        boundary: rel(bdry, scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::appendix_hexagon;

    #[test]
    fn zero_field_interpolates_to_zero() {
        let m = appendix_hexagon().unwrap().refine().unwrap();
        let dm = DofMap::new(&m);
        let x = interpolate(&m, &dm, &|_| Point2::new(0.0, 0.0));
        assert!(x.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn evaluation_outside_is_an_error() {
        let m = appendix_hexagon().unwrap();
        let dm = DofMap::new(&m);
        let x = vec![1.0; dm.dim()];
        assert!(matches!(
            evaluate_field(&m, &dm, &x, Point2::new(0.95, 0.05)),
            Err(Error::PointOutside { .. })
        ));
    }

    #[test]
    fn coefficient_length_is_checked() {
        assert!(FieldCoefficients::new(SpaceTag::El, vec![0.0; 3], 4).is_err());
        assert!(FieldCoefficients::new(SpaceTag::El, vec![0.0; 4], 4).is_ok());
    }
}
