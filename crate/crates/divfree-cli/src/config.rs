use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use divfree::pairs::Pair;
use divfree::{MeshKind, Triangulation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Lib(#[from] divfree::Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 usage, 2 mesh or space precondition, 3 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output { .. } | CliError::Csv(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Lib(e) if e.is_solver_failure() => 3,
            CliError::Lib(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "divfree", version, about = "Divergence-free finite element experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Generate or read a mesh, optionally refine and write it, and report its topology.
    Mesh(Options),
    /// Solve the manufactured Stokes problem on one level.
    StokesSolve(Options),
    /// Stokes convergence sweep.
    StokesConv(Options),
    /// Smallest Stokes eigenvalues per level.
    StokesEig(Options),
    /// Discrete inf-sup constant per level.
    Infsup(Options),
    /// Clamped plate convergence sweep.
    Biharmonic(Options),
}

#[derive(Debug, Args)]
pub struct Options {
    /// Mesh generator: appendix_hexagon, square_crisscross(N) or perturbed(BASE,REFINE,MAG[,SEED]).
    #[arg(long = "gen", conflicts_with = "input")]
    pub generator: Option<String>,
    /// Mesh file.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Finest refinement level.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// First level of a sweep.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value = "el-p0")]
    pub pair: String,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Number of eigenvalues.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Output file (CSV, or the mesh for `mesh`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for perturbed generators.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace the manufactured load by zero.
    #[arg(long)]
    pub zero_load: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    StokesSolve,
    StokesConv,
    StokesEig,
    Infsup,
    Biharmonic,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Mesh => "mesh",
            Command::StokesSolve => "stokes-solve",
            Command::StokesConv => "stokes-conv",
            Command::StokesEig => "stokes-eig",
            Command::Infsup => "infsup",
            Command::Biharmonic => "biharmonic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generator(MeshKind),
    File(PathBuf),
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::Generator(k) => write!(f, "{k}"),
            MeshSource::File(p) => write!(f, "file {}", p.display()),
        }
    }
}

impl MeshSource {
    pub fn load(&self) -> Result<Triangulation, CliError> {
        Ok(match self {
            MeshSource::Generator(k) => divfree::generate_mesh(k)?,
            MeshSource::File(p) => Triangulation::read_file(p)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub command: Command,
    pub source: MeshSource,
    pub start: usize,
    pub refine: usize,
    pub pair: Pair,
    pub epsilon: f64,
    pub k: usize,
    pub out: Option<PathBuf>,
    pub zero_load: bool,
}

impl StudyConfig {
    pub fn new(command: Command, source: MeshSource, start: usize, refine: usize, pair: Pair) -> StudyConfig {
        StudyConfig {
            command,
            source,
            start,
            refine,
            pair,
            epsilon: 1.0,
            k: 6,
            out: None,
            zero_load: false,
        }
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.refine
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(CliError::Usage(format!("--epsilon must be positive, got {}", self.epsilon)));
        }
        if self.start > self.refine {
            return Err(CliError::Usage(format!(
                "--start {} exceeds --refine {}",
                self.start, self.refine
            )));
        }
        if self.command == Command::StokesEig && self.k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        let stokes = matches!(self.command, Command::StokesSolve | Command::StokesConv | Command::StokesEig);
        if stokes && self.pair == Pair::P1P0 {
            return Err(CliError::Usage(format!("pair p1-p0 is only available for infsup, not {}", self.command)));
        }
        Ok(())
    }

    /// Builds and validates the configuration of a parsed command line.
    pub fn from_cli(cli: Cli) -> Result<StudyConfig, CliError> {
        let (command, o) = match cli.command {
            CommandArgs::Mesh(o) => (Command::Mesh, o),
            CommandArgs::StokesSolve(o) => (Command::StokesSolve, o),
            CommandArgs::StokesConv(o) => (Command::StokesConv, o),
            CommandArgs::StokesEig(o) => (Command::StokesEig, o),
            CommandArgs::Infsup(o) => (Command::Infsup, o),
            CommandArgs::Biharmonic(o) => (Command::Biharmonic, o),
        };
        let source = match (o.generator, o.input) {
            (Some(g), None) => {
                let kind: MeshKind = g.parse().map_err(|e: divfree::Error| CliError::Usage(e.to_string()))?;
                MeshSource::Generator(match o.seed {
                    Some(s) => kind.with_seed(s),
                    None => kind,
                })
            }
            (None, Some(p)) => {
                if o.seed.is_some() {
                    return Err(CliError::Usage("--seed only applies to --gen".into()));
                }
                MeshSource::File(p)
            }
            _ => return Err(CliError::Usage("exactly one of --gen and --in is required".into())),
        };
        let pair = o.pair.parse().map_err(|e: divfree::Error| CliError::Usage(e.to_string()))?;
        let start = if command == Command::StokesSolve { o.refine } else { o.start };
        let cfg = StudyConfig {
            command,
            source,
            start,
            refine: o.refine,
            pair,
            epsilon: o.epsilon,
            k: o.k,
            out: o.out,
            zero_load: o.zero_load,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
