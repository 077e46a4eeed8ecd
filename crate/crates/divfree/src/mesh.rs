//! Triangulations with derived edge topology, red refinement and the
//! plain-text mesh format.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, Point2};

/// Marker for a missing second cell on a boundary edge.
pub const NO_CELL: usize = usize::MAX;

/// Immutable 2D simplicial mesh.
///
/// Local edge `i` of a cell is the edge opposite local vertex `i`. Global
/// edges run from the lower to the higher vertex index, with normal
/// `n = (t_y, -t_x)`.
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    cell_edge_signs: Vec<[i8; 3]>,
    edge_cells: Vec<[usize; 2]>,
    vertex_boundary: Vec<bool>,
    edge_boundary: Vec<bool>,
    interior_cell: Vec<bool>,
    vertex_cells: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
}

impl Triangulation {
    /// Builds the topology. Clockwise cells are reoriented by swapping their
    /// last two vertices.
    pub fn new(vertices: Vec<Point2>, cells: Vec<[usize; 3]>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = vertices.len();
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let mut cells = cells;
        let mut scale: f64 = 0.0;
        for (t, c) in cells.iter().enumerate() {
            for &v in c {
                if v >= nv {
                    return Err(Error::IndexOutOfRange { cell: t, index: v, nv });
                }
            }
            for i in 0..3 {
                let d = vertices[c[i]] - vertices[c[(i + 1) % 3]];
                scale = scale.max(d.norm());
            }
        }
        for (t, c) in cells.iter_mut().enumerate() {
            if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::DegenerateCell(t));
            }
            let a = signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            if a.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateCell(t));
            }
            if a < 0.0 {
                c.swap(1, 2);
            }
        }

        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
        for (t, c) in cells.iter().enumerate() {
            let mut key = *c;
            key.sort_unstable();
            if let Some(&prev) = seen.get(&key) {
                return Err(Error::DuplicateCell(t, prev));
            }
            seen.insert(key, t);
        }

        // (lo, hi, cell, local) sorted lexicographically gives the edge numbering.
        let mut half: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(3 * cells.len());
        for (t, c) in cells.iter().enumerate() {
            for i in 0..3 {
                let a = c[(i + 1) % 3];
                let b = c[(i + 2) % 3];
                half.push((a.min(b), a.max(b), t, i));
            }
        }
        half.sort_unstable();

        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_cells: Vec<[usize; 2]> = Vec::new();
        let mut cell_edges = vec![[0usize; 3]; cells.len()];
        let mut cell_edge_signs = vec![[0i8; 3]; cells.len()];
        let mut k = 0;
        while k < half.len() {
            let (lo, hi, _, _) = half[k];
            let mut j = k;
            while j < half.len() && half[j].0 == lo && half[j].1 == hi {
                j += 1;
            }
            if j - k > 2 {
                return Err(Error::NonManifoldEdge(lo, hi));
            }
            let e = edges.len();
            edges.push([lo, hi]);
            let mut ec = [NO_CELL; 2];
            for (slot, &(_, _, t, i)) in half[k..j].iter().enumerate() {
                ec[slot] = t;
                cell_edges[t][i] = e;
                let start = cells[t][(i + 1) % 3];
                cell_edge_signs[t][i] = if start == lo { 1 } else { -1 };
            }
            edge_cells.push(ec);
            k = j;
        }

        let edge_boundary: Vec<bool> = edge_cells.iter().map(|c| c[1] == NO_CELL).collect();
        let mut vertex_boundary = vec![false; nv];
        for (e, ab) in edges.iter().enumerate() {
            if edge_boundary[e] {
                vertex_boundary[ab[0]] = true;
                vertex_boundary[ab[1]] = true;
            }
        }
        let interior_cell = cell_edges
            .iter()
            .map(|ce| ce.iter().all(|&e| !edge_boundary[e]))
            .collect();
        let mut vertex_cells = vec![Vec::new(); nv];
        for (t, c) in cells.iter().enumerate() {
            for &v in c {
                vertex_cells[v].push(t);
            }
        }
        let mut vertex_edges = vec![Vec::new(); nv];
        for (e, ab) in edges.iter().enumerate() {
            vertex_edges[ab[0]].push(e);
            vertex_edges[ab[1]].push(e);
        }

        Ok(Triangulation {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            vertex_boundary,
            edge_boundary,
            interior_cell,
            vertex_cells,
            vertex_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }
    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn vertex(&self, v: usize) -> Point2 {
        self.vertices[v]
    }
    pub fn cell(&self, t: usize) -> [usize; 3] {
        self.cells[t]
    }
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }
    /// Global edges of cell `t`; entry `i` is opposite local vertex `i`.
    pub fn cell_edges(&self, t: usize) -> [usize; 3] {
        self.cell_edges[t]
    }
    /// +1 where the global edge direction agrees with the counterclockwise
    /// traversal of the cell.
    pub fn cell_edge_signs(&self, t: usize) -> [f64; 3] {
        let s = self.cell_edge_signs[t];
        [s[0] as f64, s[1] as f64, s[2] as f64]
    }
    /// Incident cells of an edge; the second is [`NO_CELL`] on the boundary.
    pub fn edge_cells(&self, e: usize) -> [usize; 2] {
        self.edge_cells[e]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary[v]
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e]
    }
    /// True iff all three edges of the cell are interior.
    pub fn is_interior_cell(&self, t: usize) -> bool {
        self.interior_cell[t]
    }
    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }
    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    /// Edges with both endpoints on the boundary but two incident cells.
    pub fn is_boundary_chord(&self, e: usize) -> bool {
        let [a, b] = self.edges[e];
        !self.edge_boundary[e] && self.vertex_boundary[a] && self.vertex_boundary[b]
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.vertex_edges[a]
            .iter()
            .copied()
            .find(|&e| self.edges[e] == [a.min(b), a.max(b)])
    }

    /// The other cell across edge `e` from `t`.
    pub fn neighbor_across(&self, e: usize, t: usize) -> Option<usize> {
        let [c0, c1] = self.edge_cells[e];
        let o = if c0 == t { c1 } else { c0 };
        (o != NO_CELL && o != t).then_some(o)
    }

    /// Local position of vertex `v` in cell `t`.
    pub fn local_index(&self, t: usize, v: usize) -> Option<usize> {
        self.cells[t].iter().position(|&w| w == v)
    }

    pub fn cell_points(&self, t: usize) -> [Point2; 3] {
        let c = self.cells[t];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn cell_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.cell_points(t);
        signed_area(a, b, c)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Unit tangent (lower to higher index) and normal `(t_y, -t_x)`.
    pub fn edge_frame(&self, e: usize) -> (Point2, Point2) {
        let [a, b] = self.edges[e];
        let d = self.vertices[b] - self.vertices[a];
        let t = d * (1.0 / d.norm());
        (t, t.rot_cw())
    }

    /// Maximum edge length.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_edges()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|t| self.cell_area(t)).sum()
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(move |&v| !self.vertex_boundary[v])
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(move |&e| !self.edge_boundary[e])
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_cells()).filter(move |&t| self.interior_cell[t])
    }

    /// Red refinement: every cell is split into four through its edge
    /// midpoints. Original vertices keep their indices; the midpoint of edge
    /// `e` becomes vertex `n_vertices + e`.
    pub fn refine(&self) -> Result<Triangulation> {
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        vertices.extend(
            self.edges
                .iter()
                .map(|&[a, b]| self.vertices[a].midpoint(self.vertices[b])),
        );
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        for t in 0..self.n_cells() {
            let [a, b, c] = self.cells[t];
            let ce = self.cell_edges[t];
            // ce[2] joins a-b, ce[0] joins b-c, ce[1] joins c-a
            let ab = nv + ce[2];
            let bc = nv + ce[0];
            let ca = nv + ce[1];
            cells.push([a, ab, ca]);
            cells.push([ab, b, bc]);
            cells.push([ca, bc, c]);
            cells.push([ab, bc, ca]);
        }
        Triangulation::new(vertices, cells)
    }

    /// Applies `levels` red refinements.
    pub fn refined(&self, levels: usize) -> Result<Triangulation> {
        let mut m = self.clone();
        for _ in 0..levels {
            m = m.refine()?;
        }
        Ok(m)
    }

    /// Barycentric coordinates of `p` in cell `t`.
    pub fn barycentric(&self, t: usize, p: Point2) -> [f64; 3] {
        let [a, b, c] = self.cell_points(t);
        let s = signed_area(a, b, c);
        [
            signed_area(p, b, c) / s,
            signed_area(a, p, c) / s,
            signed_area(a, b, p) / s,
        ]
    }

    /// First cell containing `p` (brute-force scan).
    pub fn locate(&self, p: Point2) -> Option<usize> {
        const TOL: f64 = 1e-12;
        (0..self.n_cells()).find(|&t| self.barycentric(t, p).iter().all(|&l| l >= -TOL))
    }

    /// Writes the text format: `nv nc`, then `x y` lines, then `i j k` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.n_vertices(), self.n_cells()).unwrap();
        for p in &self.vertices {
            writeln!(s, "{:?} {:?}", p.x, p.y).unwrap();
        }
        for c in &self.cells {
            writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
        }
        s
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Triangulation> {
        Self::read(text.as_bytes())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Triangulation> {
        let f = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(f))
    }

    /// Parses the text format. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn read(reader: impl BufRead) -> Result<Triangulation> {
        let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            rows.push((i + 1, trimmed.split_whitespace().map(String::from).collect()));
        }
        let mut it = rows.into_iter();
        let (hline, header) = it.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let counts = parse_fields::<usize>(hline, &header, 2)?;
        let (nv, nc) = (counts[0], counts[1]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, f) = it.next().ok_or(Error::Parse {
                line: hline,
                msg: format!("expected {nv} vertex lines"),
            })?;
            let xy = parse_fields::<f64>(l, &f, 2)?;
            vertices.push(Point2::new(xy[0], xy[1]));
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (l, f) = it.next().ok_or(Error::Parse {
                line: hline,
                msg: format!("expected {nc} cell lines"),
            })?;
            let c = parse_fields::<usize>(l, &f, 3)?;
            cells.push([c[0], c[1], c[2]]);
        }
        if let Some((l, _)) = it.next() {
            return Err(Error::Parse {
                line: l,
                msg: "trailing data".into(),
            });
        }
        Triangulation::new(vertices, cells)
    }
}

fn parse_fields<T: std::str::FromStr>(line: usize, fields: &[String], n: usize) -> Result<Vec<T>> {
    if fields.len() != n {
        return Err(Error::Parse {
            line,
            msg: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse '{f}'"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cell() -> Triangulation {
        Triangulation::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn single_cell_topology() {
        let m = unit_cell();
        assert_eq!(m.n_edges(), 3);
        assert!((0..3).all(|e| m.is_boundary_edge(e)));
        assert!(m.interior_vertices().next().is_none());
        assert!(!m.is_interior_cell(0));
    }

    #[test]
    fn clockwise_cell_is_reoriented() {
        let m = Triangulation::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            vec![[0, 2, 1]],
        )
        .unwrap();
        assert!(m.cell_area(0) > 0.0);
        assert_eq!(m.cell(0), [0, 1, 2]);
    }

    #[test]
    fn rejects_bad_input() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(2.0, 0.0),
        ];
        assert!(matches!(
            Triangulation::new(v.clone(), vec![[0, 1, 3]]),
            Err(Error::DegenerateCell(0))
        ));
        assert!(matches!(
            Triangulation::new(v.clone(), vec![[0, 1, 2], [2, 1, 0]]),
            Err(Error::DuplicateCell(1, 0))
        ));
        assert!(matches!(
            Triangulation::new(v.clone(), vec![[0, 1, 7]]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(Triangulation::new(v, vec![]), Err(Error::EmptyMesh)));
        let w = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 1.0),
            Point2::new(0.5, -1.0),
            Point2::new(0.5, 0.5),
        ];
        assert!(matches!(
            Triangulation::new(w, vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]]),
            Err(Error::NonManifoldEdge(0, 1))
        ));
    }

    #[test]
    fn edge_signs_follow_ccw_traversal() {
        let m = unit_cell();
        // local edge 0 runs 1 -> 2, global 1 -> 2
        assert_eq!(m.cell_edge_signs(0), [1.0, -1.0, 1.0]);
    }

    #[test]
    fn refine_single_cell() {
        let m = unit_cell().refine().unwrap();
        assert_eq!((m.n_cells(), m.n_vertices(), m.n_edges()), (4, 6, 9));
        assert!((m.total_area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let m = unit_cell().refined(2).unwrap();
        let s = m.to_text();
        let m2 = Triangulation::from_text(&format!("# comment\n{s}")).unwrap();
        assert_eq!(m2.to_text(), s);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Triangulation::from_text("3 1\n0 0\n1 x\n0 1\n0 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}
