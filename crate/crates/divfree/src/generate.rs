//! Mesh generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{signed_area, Point2};
use crate::mesh::Triangulation;

const MAX_PERTURB_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshKind {
    /// Six-cell fan on the hexagon (0,1)^2 minus two corner triangles.
    AppendixHexagon,
    /// Unit square split into n x n squares, each cut by both diagonals.
    SquareCrisscross(usize),
    /// `base` refined `base_refine` times, then interior vertices moved by up
    /// at most `magnitude` times their shortest incident edge.
    Perturbed {
        base: Box<MeshKind>,
        base_refine: usize,
        magnitude: f64,
        seed: u64,
    },
}

impl MeshKind {
    pub fn with_seed(self, seed: u64) -> MeshKind {
        match self {
            MeshKind::Perturbed {
                base,
                base_refine,
                magnitude,
                ..
            } => MeshKind::Perturbed {
                base,
                base_refine,
                magnitude,
                seed,
            },
            k => k,
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshKind::AppendixHexagon => write!(f, "appendix_hexagon"),
            MeshKind::SquareCrisscross(n) => write!(f, "square_crisscross({n})"),
            MeshKind::Perturbed {
                base,
                base_refine,
                magnitude,
                seed,
            } => write!(f, "perturbed({base},{base_refine},{magnitude},{seed})"),
        }
    }
}

/// Accepts `appendix_hexagon`, `square_crisscross(N)` and
/// `perturbed(BASE,REFINE,MAGNITUDE[,SEED])`.
impl FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<MeshKind> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("unknown mesh generator '{s}'"));
        if s == "appendix_hexagon" {
            return Ok(MeshKind::AppendixHexagon);
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|r| r.split_once('('))
            .ok_or_else(bad)?;
        match name.trim() {
            "square_crisscross" => {
                let n = args.trim().parse().map_err(|_| bad())?;
                Ok(MeshKind::SquareCrisscross(n))
            }
            "perturbed" => {
                // the base may itself contain commas inside parentheses
                let mut depth = 0;
                let mut parts = Vec::new();
                let mut start = 0;
                for (i, ch) in args.char_indices() {
                    match ch {
                        '(' => depth += 1,
                        ')' => depth -= 1,
                        ',' if depth == 0 => {
                            parts.push(&args[start..i]);
                            start = i + 1;
                        }
                        _ => {}
                    }
                }
                parts.push(&args[start..]);
                if parts.len() != 3 && parts.len() != 4 {
                    return Err(bad());
                }
                let base: MeshKind = parts[0].parse()?;
                let base_refine = parts[1].trim().parse().map_err(|_| bad())?;
                let magnitude = parts[2].trim().parse().map_err(|_| bad())?;
                let seed = match parts.get(3) {
                    Some(p) => p.trim().parse().map_err(|_| bad())?,
                    None => 1,
                };
                Ok(MeshKind::Perturbed {
                    base: Box::new(base),
                    base_refine,
                    magnitude,
                    seed,
                })
            }
            _ => Err(bad()),
        }
    }
}

pub fn generate_mesh(kind: &MeshKind) -> Result<Triangulation> {
    match kind {
        MeshKind::AppendixHexagon => appendix_hexagon(),
        MeshKind::SquareCrisscross(n) => square_crisscross(*n),
        MeshKind::Perturbed {
            base,
            base_refine,
            magnitude,
            seed,
        } => perturbed(&generate_mesh(base)?.refined(*base_refine)?, *magnitude, *seed),
    }
}

pub fn appendix_hexagon() -> Result<Triangulation> {
    let v = vec![
        Point2::new(0.5, 0.5),
        Point2::new(0.0, 0.0),
        Point2::new(0.5, 0.0),
        Point2::new(1.0, 0.5),
        Point2::new(1.0, 1.0),
        Point2::new(0.5, 1.0),
        Point2::new(0.0, 0.5),
    ];
    let cells = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
    Triangulation::new(v, cells)
}

pub fn square_crisscross(n: usize) -> Result<Triangulation> {
    if n == 0 {
        return Err(Error::InvalidParameter("square_crisscross needs n >= 1".into()));
    }
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    let mut v = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for i in 0..=n {
        for j in 0..=n {
            v.push(Point2::new(i as f64 * h, j as f64 * h));
        }
    }
    let mut cells = Vec::with_capacity(4 * n * n);
    for i in 0..n {
        for j in 0..n {
            let c = v.len();
            v.push(Point2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            let (a, b, d, e) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.extend([[a, b, c], [b, d, c], [d, e, c], [e, a, c]]);
        }
    }
    Triangulation::new(v, cells)
}

/// Moves interior vertices by a seeded random offset. Boundary vertices are
/// fixed, so the domain is unchanged.
pub fn perturbed(base: &Triangulation, magnitude: f64, seed: u64) -> Result<Triangulation> {
    if !(0.0..0.3).contains(&magnitude) {
        return Err(Error::InvalidParameter(format!(
            "perturbation magnitude {magnitude} outside [0, 0.3)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach: Vec<f64> = (0..base.n_vertices())
        .map(|v| {
            base.vertex_edges(v)
                .iter()
                .map(|&e| base.edge_length(e))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for _ in 0..MAX_PERTURB_ATTEMPTS {
        let mut pts = base.vertices().to_vec();
        for v in base.interior_vertices() {
            let r = magnitude * reach[v];
            let dx: f64 = rng.random_range(-1.0..1.0);
            let dy: f64 = rng.random_range(-1.0..1.0);
            pts[v] = pts[v] + Point2::new(dx * r, dy * r);
        }
        let ok = base.cells().iter().all(|c| signed_area(pts[c[0]], pts[c[1]], pts[c[2]]) > 0.0);
        if ok {
            return Triangulation::new(pts, base.cells().to_vec());
        }
    }
    Err(Error::PerturbationFailed {
        attempts: MAX_PERTURB_ATTEMPTS,
    })
}
