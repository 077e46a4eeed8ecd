//! Velocity/pressure pairs assembled on one mesh.

use std::fmt;
use std::str::FromStr;

use crate::assembly::{
    assemble_div, assemble_gradgrad, assemble_load, assemble_mass, assemble_pressure_mass, reduce, reduce_columns,
    PressureKind, SparseOperator,
};
use crate::combination::CombinationMatrix;
use crate::dofmap::DofMap;
use crate::el::build_el_basis;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::mesh::Triangulation;
use crate::p1div::build_p1div_space;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pair {
    SbdfmP1,
    ElP0,
    P1P0,
}

impl Pair {
    pub fn pressure(self) -> PressureKind {
        match self {
            Pair::SbdfmP1 => PressureKind::P1,
            Pair::ElP0 | Pair::P1P0 => PressureKind::P0,
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pair::SbdfmP1 => "sbdfm-p1",
            Pair::ElP0 => "el-p0",
            Pair::P1P0 => "p1-p0",
        })
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pair> {
        match s {
            "sbdfm-p1" => Ok(Pair::SbdfmP1),
            "el-p0" => Ok(Pair::ElP0),
            "p1-p0" => Ok(Pair::P1P0),
            _ => Err(Error::InvalidParameter(format!(
                "unknown pair '{s}' (expected sbdfm-p1, el-p0 or p1-p0)"
            ))),
        }
    }
}

/// Operators of one pair. For derived velocity spaces `a`, `m` and `b` are
/// already reduced onto `basis`.
pub struct Discretization {
    pub pair: Pair,
    pub dofmap: DofMap,
    /// `None` for the full sBDFM space.
    pub basis: Option<CombinationMatrix>,
    pub a: SparseOperator,
    pub m: SparseOperator,
    pub b: SparseOperator,
    pub mp: SparseOperator,
}

impl Discretization {
    pub fn new(tri: &Triangulation, pair: Pair) -> Result<Discretization> {
        let dofmap = DofMap::new(tri);
        let basis = match pair {
            Pair::SbdfmP1 => None,
            Pair::ElP0 => Some(build_el_basis(tri, &dofmap)?),
            Pair::P1P0 => Some(build_p1div_space(tri, &dofmap)?),
        };
        let a = assemble_gradgrad(tri, &dofmap);
        let m = assemble_mass(tri, &dofmap);
        let b = assemble_div(tri, &dofmap, pair.pressure());
        let mp = assemble_pressure_mass(tri, pair.pressure());
        let (a, m, b) = match &basis {
            None => (a, m, b),
            Some(c) => (reduce(&a, c)?, reduce(&m, c)?, reduce_columns(&b, c)?),
        };
        Ok(Discretization {
            pair,
            dofmap,
            basis,
            a,
            m,
            b,
            mp,
        })
    }

    pub fn velocity_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn pressure_dim(&self) -> usize {
        self.b.nrows()
    }

    /// Load vector in the pair's velocity coordinates.
    pub fn load(&self, tri: &Triangulation, f: &dyn Fn(Point2) -> Point2) -> Vec<f64> {
        let l = assemble_load(tri, &self.dofmap, f);
        match &self.basis {
            None => l,
            Some(c) => c.restrict(&l),
        }
    }

    /// sBDFM coefficients of a velocity given in the pair's coordinates.
    pub fn to_sbdfm(&self, x: &[f64]) -> Vec<f64> {
        match &self.basis {
            None => x.to_vec(),
            Some(c) => c.expand(x),
        }
    }
}
