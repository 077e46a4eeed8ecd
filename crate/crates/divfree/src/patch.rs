//! Vertex and cell patches, vertex layers and mesh counts.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::signed_area;
use crate::mesh::Triangulation;

/// Cells around an interior vertex `O`, in counterclockwise order.
///
/// Cell `cells[i]` is `(O, rim[i-1], rim[i])` (indices mod m); the spoke
/// `spokes[i]` joins `O` and `rim[i]` and is shared by `cells[i]` and
/// `cells[i+1]`; `rim_edges[i]` is the edge of `cells[i]` opposite `O`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPatch {
    pub center: usize,
    pub cells: Vec<usize>,
    pub rim: Vec<usize>,
    pub spokes: Vec<usize>,
    pub rim_edges: Vec<usize>,
    pub areas: Vec<f64>,
}

impl VertexPatch {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, cell: usize) -> Option<usize> {
        self.cells.iter().position(|&c| c == cell)
    }

    fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.len() as isize) as usize
    }

    pub fn rim_at(&self, i: isize) -> usize {
        self.rim[self.wrap(i)]
    }

    pub fn area_at(&self, i: isize) -> f64 {
        self.areas[self.wrap(i)]
    }
}

/// Builds the patch around interior vertex `v`, starting from its
/// lowest-index cell.
pub fn vertex_patch(tri: &Triangulation, v: usize) -> Result<VertexPatch> {
    if tri.is_boundary_vertex(v) {
        return Err(Error::NotInterior(v));
    }
    let around = tri.vertex_cells(v);
    let rot = |t: usize| {
        let c = tri.cell(t);
        let i = tri.local_index(t, v).unwrap();
        (c[(i + 1) % 3], c[(i + 2) % 3])
    };
    let start = *around.iter().min().ok_or(Error::OpenFan(v))?;
    let mut cells = vec![start];
    loop {
        let (_, b) = rot(*cells.last().unwrap());
        let next = around
            .iter()
            .copied()
            .find(|&t| rot(t).0 == b)
            .ok_or(Error::OpenFan(v))?;
        if next == start {
            break;
        }
        if cells.len() > around.len() {
            return Err(Error::OpenFan(v));
        }
        cells.push(next);
    }
    if cells.len() != around.len() || cells.len() < 3 {
        return Err(Error::OpenFan(v));
    }
    let rim: Vec<usize> = cells.iter().map(|&t| rot(t).1).collect();
    let spokes = rim
        .iter()
        .map(|&a| tri.edge_between(v, a).ok_or(Error::OpenFan(v)))
        .collect::<Result<Vec<_>>>()?;
    let rim_edges = cells
        .iter()
        .map(|&t| tri.cell_edges(t)[tri.local_index(t, v).unwrap()])
        .collect();
    let areas = cells.iter().map(|&t| tri.cell_area(t)).collect();
    Ok(VertexPatch {
        center: v,
        cells,
        rim,
        spokes,
        rim_edges,
        areas,
    })
}

/// Signed coefficient `c_i = area(A_{i-1}, A_i, A_{i+1}) / (S_i + S_{i+1})`
/// attached to rim vertex `i` (0-based), where `S_i` is the area of
/// `cells[i]`. Equals `d d sin(angle at A_i) / (2 (S_i + S_{i+1}))`.
pub fn patch_geometry(tri: &Triangulation, patch: &VertexPatch, i: usize) -> f64 {
    let i = i as isize;
    let a = tri.vertex(patch.rim_at(i - 1));
    let b = tri.vertex(patch.rim_at(i));
    let c = tri.vertex(patch.rim_at(i + 1));
    signed_area(a, b, c) / (patch.area_at(i) + patch.area_at(i + 1))
}

/// An interior cell together with its three edge neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPatch {
    pub center: usize,
    /// `neighbors[j]` lies across local edge `j` of the center.
    pub neighbors: [usize; 3],
    /// `areas[0]` is the center, `areas[j + 1]` neighbour `j`.
    pub areas: [f64; 4],
}

pub fn cell_patch(tri: &Triangulation, t: usize) -> Result<CellPatch> {
    if !tri.is_interior_cell(t) {
        return Err(Error::NotInteriorCell(t));
    }
    let ce = tri.cell_edges(t);
    let mut neighbors = [0; 3];
    for j in 0..3 {
        neighbors[j] = tri.neighbor_across(ce[j], t).ok_or(Error::NotInteriorCell(t))?;
    }
    let areas = [
        tri.cell_area(t),
        tri.cell_area(neighbors[0]),
        tri.cell_area(neighbors[1]),
        tri.cell_area(neighbors[2]),
    ];
    Ok(CellPatch {
        center: t,
        neighbors,
        areas,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshCounts {
    pub vertices: usize,
    pub interior_vertices: usize,
    pub boundary_vertices: usize,
    pub edges: usize,
    pub interior_edges: usize,
    pub boundary_edges: usize,
    pub cells: usize,
    pub interior_cells: usize,
    /// Layer of each vertex: `Some(k)` for interior vertices in the k-th
    /// layer, `None` for boundary vertices (and unreachable interior ones).
    pub layer: Vec<Option<usize>>,
    pub number_of_layers: usize,
    /// Boundary vertices without an interior neighbour.
    pub assumption1_violations: Vec<usize>,
    /// Interior edges joining two boundary vertices.
    pub boundary_chords: Vec<usize>,
}

impl MeshCounts {
    pub fn assumption1_holds(&self) -> bool {
        self.assumption1_violations.is_empty()
    }

    /// Whether `#T^i = 2 #X^i - 2`.
    pub fn interior_cell_identity_holds(&self) -> bool {
        self.interior_cells + 2 == 2 * self.interior_vertices
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.cells as i64
    }
}

pub fn counts_and_layers(tri: &Triangulation) -> MeshCounts {
    let nv = tri.n_vertices();
    let mut layer: Vec<Option<usize>> = vec![None; nv];
    let mut queue = VecDeque::new();
    // layer 1: interior vertices with an interior edge to the boundary
    for v in tri.interior_vertices() {
        let touches = tri.vertex_edges(v).iter().any(|&e| {
            let [a, b] = tri.edge(e);
            let w = if a == v { b } else { a };
            !tri.is_boundary_edge(e) && tri.is_boundary_vertex(w)
        });
        if touches {
            layer[v] = Some(1);
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let k = layer[v].unwrap();
        for &e in tri.vertex_edges(v) {
            let [a, b] = tri.edge(e);
            let w = if a == v { b } else { a };
            if !tri.is_boundary_vertex(w) && layer[w].is_none() {
                layer[w] = Some(k + 1);
                queue.push_back(w);
            }
        }
    }
    let number_of_layers = layer.iter().flatten().copied().max().unwrap_or(0);
    let assumption1_violations = (0..nv)
        .filter(|&v| tri.is_boundary_vertex(v))
        .filter(|&v| {
            !tri.vertex_edges(v).iter().any(|&e| {
                let [a, b] = tri.edge(e);
                let w = if a == v { b } else { a };
                !tri.is_boundary_vertex(w)
            })
        })
        .collect();
    let boundary_chords = (0..tri.n_edges()).filter(|&e| tri.is_boundary_chord(e)).collect();
    let interior_vertices = tri.interior_vertices().count();
    let interior_edges = tri.interior_edges().count();
    MeshCounts {
        vertices: nv,
        interior_vertices,
        boundary_vertices: nv - interior_vertices,
        edges: tri.n_edges(),
        interior_edges,
        boundary_edges: tri.n_edges() - interior_edges,
        cells: tri.n_cells(),
        interior_cells: tri.interior_cells().count(),
        layer,
        number_of_layers,
        assumption1_violations,
        boundary_chords,
    }
}

/// Errors unless every boundary vertex has an interior neighbour.
pub fn check_assumption1(tri: &Triangulation) -> Result<()> {
    match counts_and_layers(tri).assumption1_violations.first() {
        Some(&v) => Err(Error::AssumptionViolated(v)),
        None => Ok(()),
    }
}
