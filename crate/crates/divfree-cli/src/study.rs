use divfree::assembly::{
    assemble_gradgrad, assemble_mass, potential_error, pressure_error, velocity_error, FnVectorField, ScalarField,
    VectorField,
};
use divfree::dofmap::DofMap;
use divfree::kernel::{build_kernel_basis, build_potential_basis};
use divfree::manufactured::{BubblePlate, StokesBubble};
use divfree::pairs::{Discretization, Pair};
use divfree::patch::{counts_and_layers, MeshCounts};
use divfree::solvers::{
    infsup_constant, solve_biharmonic, solve_stokes, stokes_eigs, stokes_eigs_saddle, EigenMethod, InfSupReport,
};
use divfree::sparse::norm;
use divfree::{Point2, Triangulation};

use crate::config::{CliError, StudyConfig};
use crate::table::{num, opt, rate, rates, Table};

pub struct Level {
    pub level: usize,
    pub mesh: Triangulation,
    pub counts: MeshCounts,
}

pub fn counts_line(c: &MeshCounts) -> String {
    format!(
        "vertices={} interior_vertices={} edges={} interior_edges={} cells={} interior_cells={} layers={}",
        c.vertices, c.interior_vertices, c.edges, c.interior_edges, c.cells, c.interior_cells, c.number_of_layers
    )
}

/// Human-readable topology report of one mesh.
pub fn mesh_report(tri: &Triangulation) -> Vec<String> {
    let c = counts_and_layers(tri);
    let mut out = vec![
        counts_line(&c),
        format!("h={} area={}", num(tri.mesh_size()), num(tri.total_area())),
        format!(
            "interior cells = 2 * interior vertices - 2: {}",
            if c.interior_cell_identity_holds() { "holds" } else { "fails" }
        ),
    ];
    for k in 1..=c.number_of_layers {
        let n = c.layer.iter().filter(|&&l| l == Some(k)).count();
        out.push(format!("layer {k}: {n} vertices"));
    }
    if c.assumption1_holds() {
        out.push("assumption 1: holds".into());
    } else {
        out.push(format!(
            "assumption 1: VIOLATED at boundary vertices {:?}",
            c.assumption1_violations
        ));
    }
    if !c.boundary_chords.is_empty() {
        out.push(format!("interior edges joining two boundary vertices: {:?}", c.boundary_chords));
    }
    out
}

/// Meshes of the configured levels, checked against Assumption 1.
pub fn levels(cfg: &StudyConfig) -> Result<Vec<Level>, CliError> {
    let mut mesh = cfg.source.load()?;
    let mut out = Vec::new();
    for level in 0..=cfg.refine {
        if level > 0 {
            mesh = mesh.refine()?;
        }
        if level < cfg.start {
            continue;
        }
        let counts = counts_and_layers(&mesh);
        if let Some(&v) = counts.assumption1_violations.first() {
            return Err(divfree::Error::AssumptionViolated(v).into());
        }
        out.push(Level {
            level,
            mesh: mesh.clone(),
            counts,
        });
    }
    Ok(out)
}

fn metadata(cfg: &StudyConfig, levels: &[Level]) -> Vec<String> {
    let mut m = vec![
        format!("command: {}", cfg.command),
        format!("mesh: {}", cfg.source),
        format!("levels: {}..={}", cfg.start, cfg.refine),
    ];
    match cfg.command {
        crate::config::Command::Biharmonic => {}
        crate::config::Command::Infsup => m.push(format!("pair: {}", cfg.pair)),
        crate::config::Command::StokesEig => {
            m.push(format!("pair: {}", cfg.pair));
            m.push(format!("epsilon: {}", cfg.epsilon));
            m.push(format!("k: {}", cfg.k));
        }
        _ => {
            m.push(format!("pair: {}", cfg.pair));
            m.push(format!("epsilon: {}", cfg.epsilon));
        }
    }
    if cfg.zero_load {
        m.push("load: zero".into());
    }
    for l in levels {
        m.push(format!("level {}: {}", l.level, counts_line(&l.counts)));
    }
    m
}

/// The manufactured solutions live on the unit square.
fn require_unit_square(tri: &Triangulation) -> Result<(), CliError> {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in tri.vertices() {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let square = lo == Point2::new(0.0, 0.0) && hi == Point2::new(1.0, 1.0) && (tri.total_area() - 1.0).abs() < 1e-12;
    if square {
        Ok(())
    } else {
        Err(CliError::Precondition(
            "the manufactured solution needs the unit square; use --zero-load on other domains".into(),
        ))
    }
}

struct Zero;

impl ScalarField for Zero {
    fn value(&self, _: Point2) -> f64 {
        0.0
    }
    fn gradient(&self, _: Point2) -> Point2 {
        Point2::new(0.0, 0.0)
    }
    fn hessian(&self, _: Point2) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

fn zero_velocity() -> impl VectorField {
    FnVectorField(|_| Point2::new(0.0, 0.0), |_| [Point2::new(0.0, 0.0); 2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesRow {
    pub level: usize,
    pub h: f64,
    pub velocity_dim: usize,
    pub pressure_dim: usize,
    pub velocity_h1: f64,
    pub pressure_l2: f64,
    /// `max |B u|` relative to `max |u|`.
    pub divergence: f64,
    pub residual: f64,
    pub pressure_mean: f64,
    /// sBDFM coefficients of the velocity.
    pub velocity: Vec<f64>,
}

/// Solves the Stokes problem of `cfg` on one mesh.
pub fn stokes_row(cfg: &StudyConfig, level: &Level, extra: Option<&dyn Fn(Point2) -> Point2>) -> Result<StokesRow, CliError> {
    let m = &level.mesh;
    if !cfg.zero_load {
        require_unit_square(m)?;
    }
    let d = Discretization::new(m, cfg.pair)?;
    let exact = StokesBubble { epsilon: cfg.epsilon };
    let f = |p: Point2| {
        let base = if cfg.zero_load { Point2::new(0.0, 0.0) } else { exact.forcing(p) };
        match extra {
            Some(g) => base + g(p),
            None => base,
        }
    };
    let s = solve_stokes(&d.a, &d.b, &d.mp, &d.load(m, &f), cfg.epsilon)?;
    let u = d.to_sbdfm(&s.velocity);
    let (h1, pl2) = if cfg.zero_load {
        let e = velocity_error(m, &d.dofmap, &u, &zero_velocity());
        (e.h1_semi, pressure_error(m, cfg.pair.pressure(), &s.pressure, &|_| 0.0))
    } else {
        let e = velocity_error(m, &d.dofmap, &u, &exact);
        (e.h1_semi, pressure_error(m, cfg.pair.pressure(), &s.pressure, &|p| exact.pressure(p)))
    };
    let umax = s.velocity.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(StokesRow {
        level: level.level,
        h: m.mesh_size(),
        velocity_dim: d.velocity_dim(),
        pressure_dim: d.pressure_dim(),
        velocity_h1: h1,
        pressure_l2: pl2,
        divergence: if umax > 0.0 { s.divergence / umax } else { 0.0 },
        residual: s.residual,
        pressure_mean: s.mean,
        velocity: u,
    })
}

pub struct StokesStudy {
    pub meta: Vec<String>,
    pub rows: Vec<StokesRow>,
}

pub fn stokes_study(cfg: &StudyConfig) -> Result<StokesStudy, CliError> {
    let levels = levels(cfg)?;
    let rows = levels.iter().map(|l| stokes_row(cfg, l, None)).collect::<Result<Vec<_>, _>>()?;
    Ok(StokesStudy {
        meta: metadata(cfg, &levels),
        rows,
    })
}

impl StokesStudy {
    pub fn velocity_rates(&self) -> Vec<Option<f64>> {
        rates(&self.rows.iter().map(|r| r.velocity_h1).collect::<Vec<_>>())
    }

    pub fn pressure_rates(&self) -> Vec<Option<f64>> {
        rates(&self.rows.iter().map(|r| r.pressure_l2).collect::<Vec<_>>())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "level", "h", "velocity_dofs", "pressure_dofs", "u_h1", "u_rate", "p_l2", "p_rate", "div_rel", "residual",
        ]);
        t.meta = self.meta.clone();
        let (ur, pr) = (self.velocity_rates(), self.pressure_rates());
        for (i, r) in self.rows.iter().enumerate() {
            t.rows.push(vec![
                r.level.to_string(),
                num(r.h),
                r.velocity_dim.to_string(),
                r.pressure_dim.to_string(),
                num(r.velocity_h1),
                opt(ur[i]),
                num(r.pressure_l2),
                opt(pr[i]),
                num(r.divergence),
                num(r.residual),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenRow {
    pub level: usize,
    pub h: f64,
    pub values: Vec<f64>,
    pub max_residual: f64,
    pub method: EigenMethod,
}

pub struct EigenStudy {
    pub meta: Vec<String>,
    pub rows: Vec<EigenRow>,
}

/// Eigenvalues through the kernel basis (`sbdfm-p1`) or the enriched
/// saddle system (`el-p0`).
pub fn eigen_study(cfg: &StudyConfig) -> Result<EigenStudy, CliError> {
    let levels = levels(cfg)?;
    let mut rows = Vec::new();
    for l in &levels {
        let m = &l.mesh;
        let r = match cfg.pair {
            Pair::SbdfmP1 => {
                let dm = DofMap::new(m);
                let k = build_kernel_basis(m, &dm)?;
                stokes_eigs(&assemble_gradgrad(m, &dm), &assemble_mass(m, &dm), &k, cfg.k, cfg.epsilon)?
            }
            Pair::ElP0 => {
                let d = Discretization::new(m, Pair::ElP0)?;
                stokes_eigs_saddle(&d.a, &d.m, &d.b, &d.mp, cfg.k, cfg.epsilon)?
            }
            Pair::P1P0 => return Err(CliError::Usage("stokes-eig needs sbdfm-p1 or el-p0".into())),
        };
        rows.push(EigenRow {
            level: l.level,
            h: m.mesh_size(),
            max_residual: r.residuals.iter().fold(0.0, |a: f64, &b| a.max(b)),
            values: r.values,
            method: r.method,
        });
    }
    Ok(EigenStudy {
        meta: metadata(cfg, &levels),
        rows,
    })
}

impl EigenStudy {
    /// Whether every eigenvalue dropped against the previous row.
    pub fn decreasing(&self) -> Vec<Option<bool>> {
        let mut out = vec![None];
        for w in self.rows.windows(2) {
            out.push(Some(w[0].values.iter().zip(&w[1].values).all(|(a, b)| b < a)));
        }
        out.truncate(self.rows.len());
        out
    }

    /// `log2((l0 - l1) / (l1 - l2))` per column over three consecutive rows.
    pub fn richardson_rates(&self) -> Vec<Vec<Option<f64>>> {
        (0..self.rows.len())
            .map(|i| {
                let k = self.rows[i].values.len();
                (0..k)
                    .map(|j| {
                        (i >= 2).then(|| {
                            let (a, b, c) = (self.rows[i - 2].values[j], self.rows[i - 1].values[j], self.rows[i].values[j]);
                            rate(a - b, b - c)
                        })?
                    })
                    .collect()
            })
            .collect()
    }

    pub fn table(&self) -> Table {
        let k = self.rows.first().map_or(0, |r| r.values.len());
        let mut header = vec!["level".to_string(), "h".to_string()];
        header.extend((1..=k).map(|j| format!("lambda_{j}")));
        header.extend((1..=k).map(|j| format!("rate_{j}")));
        header.extend(["trend".to_string(), "max_residual".to_string(), "method".to_string()]);
        let mut t = Table {
            meta: self.meta.clone(),
            header,
            rows: Vec::new(),
        };
        let (dec, rr) = (self.decreasing(), self.richardson_rates());
        for (i, r) in self.rows.iter().enumerate() {
            let mut row = vec![r.level.to_string(), num(r.h)];
            row.extend(r.values.iter().map(|&v| num(v)));
            row.extend(rr[i].iter().map(|&x| opt(x)));
            row.push(match dec[i] {
                None => String::new(),
                Some(true) => "decreasing".into(),
                Some(false) => "not-decreasing".into(),
            });
            row.push(num(r.max_residual));
            row.push(format!("{:?}", r.method).to_lowercase());
            t.rows.push(row);
        }
        t
    }
}

#[derive(Debug, Clone)]
pub struct InfSupRow {
    pub level: usize,
    pub h: f64,
    pub report: InfSupReport,
}

pub struct InfSupStudy {
    pub meta: Vec<String>,
    pub rows: Vec<InfSupRow>,
}

pub fn infsup_study(cfg: &StudyConfig) -> Result<InfSupStudy, CliError> {
    let levels = levels(cfg)?;
    let mut rows = Vec::new();
    for l in &levels {
        let d = Discretization::new(&l.mesh, cfg.pair)?;
        rows.push(InfSupRow {
            level: l.level,
            h: l.mesh.mesh_size(),
            report: infsup_constant(&d.a, &d.b, &d.mp)?,
        });
    }
    Ok(InfSupStudy {
        meta: metadata(cfg, &levels),
        rows,
    })
}

impl InfSupStudy {
    pub fn betas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.report.beta).collect()
    }

    /// Rates of `beta` between consecutive levels.
    pub fn rates(&self) -> Vec<Option<f64>> {
        rates(&self.betas())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "level",
            "h",
            "lambda_min_plus",
            "lambda_max",
            "beta",
            "rate",
            "sqrt_lambda_max",
            "null_dim",
            "max_residual",
            "method",
        ]);
        t.meta = self.meta.clone();
        t.meta.push("beta = sqrt(lambda_min_plus); rate = log2 of consecutive beta ratios".into());
        let rr = self.rates();
        for (i, r) in self.rows.iter().enumerate() {
            let p = &r.report;
            t.rows.push(vec![
                r.level.to_string(),
                num(r.h),
                num(p.lambda_min_plus),
                num(p.lambda_max),
                num(p.beta),
                opt(rr[i]),
                num(p.sqrt_lambda_max),
                p.null_dim.map(|n| n.to_string()).unwrap_or_default(),
                num(p.residuals[0].max(p.residuals[1])),
                format!("{:?}", p.method).to_lowercase(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiharmonicRow {
    pub level: usize,
    pub h: f64,
    pub h2: f64,
    pub h1: f64,
    pub l2: f64,
    /// Relative difference between the curl of the potential and the
    /// sBDFM-P1 Stokes velocity for the matching load.
    pub stokes_match: f64,
}

pub struct BiharmonicStudy {
    pub meta: Vec<String>,
    pub rows: Vec<BiharmonicRow>,
}

pub fn biharmonic_study(cfg: &StudyConfig) -> Result<BiharmonicStudy, CliError> {
    let levels = levels(cfg)?;
    let mut rows = Vec::new();
    for l in &levels {
        let m = &l.mesh;
        if !cfg.zero_load {
            require_unit_square(m)?;
        }
        let dm = DofMap::new(m);
        let a = assemble_gradgrad(m, &dm);
        let k = build_kernel_basis(m, &dm)?;
        let pot = build_potential_basis(m)?;
        let zero = cfg.zero_load;
        let s = solve_biharmonic(m, &a, &k, &pot, &|p| if zero { 0.0 } else { BubblePlate.load(p) })?;
        let e = if zero {
            potential_error(m, &pot, &s.coefficients, &Zero)
        } else {
            potential_error(m, &pot, &s.coefficients, &BubblePlate)
        };
        let mut scfg = cfg.clone();
        scfg.pair = Pair::SbdfmP1;
        scfg.epsilon = 1.0;
        let stokes = stokes_row(&scfg, l, None)?.velocity;
        let curl = k.expand(&s.coefficients);
        let diff: Vec<f64> = curl.iter().zip(&stokes).map(|(a, b)| a - b).collect();
        let scale = norm(&curl).max(norm(&stokes));
        rows.push(BiharmonicRow {
            level: l.level,
            h: m.mesh_size(),
            h2: e.h2_semi.unwrap_or(f64::NAN),
            h1: e.h1_semi,
            l2: e.l2,
            stokes_match: if scale > 0.0 { norm(&diff) / scale } else { 0.0 },
        });
    }
    Ok(BiharmonicStudy {
        meta: metadata(cfg, &levels),
        rows,
    })
}

impl BiharmonicStudy {
    pub fn rates(&self) -> Vec<Option<f64>> {
        rates(&self.rows.iter().map(|r| r.h2).collect::<Vec<_>>())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["level", "h", "u_h2", "rate", "u_h1", "u_l2", "stokes_match"]);
        t.meta = self.meta.clone();
        let rr = self.rates();
        for (i, r) in self.rows.iter().enumerate() {
            t.rows.push(vec![
                r.level.to_string(),
                num(r.h),
                num(r.h2),
                opt(rr[i]),
                num(r.h1),
                num(r.l2),
                num(r.stokes_match),
            ]);
        }
        t
    }
}
