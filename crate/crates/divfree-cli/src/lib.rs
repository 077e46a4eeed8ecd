//! Experiment drivers behind the `divfree` command line.

pub mod config;
pub mod study;
pub mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};

use clap::Parser;

pub use config::{Cli, CliError, Command, MeshSource, StudyConfig};
pub use study::{biharmonic_study, eigen_study, infsup_study, mesh_report, stokes_study};
pub use table::{rate, Table};

/// Refines the source mesh, writes it to `--out` if given and returns the
/// report. Assumption 1 violations are reported, not rejected.
pub fn mesh_command(cfg: &StudyConfig) -> Result<Vec<String>, CliError> {
    let mesh = cfg.source.load()?.refined(cfg.refine)?;
    if let Some(p) = &cfg.out {
        mesh.write_file(p).map_err(|e| match e {
            divfree::Error::Io(source) => CliError::Output {
                path: p.display().to_string(),
                source,
            },
            e => e.into(),
        })?;
    }
    let mut lines = vec![format!("mesh: {} refined {} times", cfg.source, cfg.refine)];
    lines.extend(mesh_report(&mesh));
    Ok(lines)
}

/// The result table of a study command.
pub fn study_table(cfg: &StudyConfig) -> Result<Table, CliError> {
    Ok(match cfg.command {
        Command::Mesh => {
            return Err(CliError::Usage("mesh does not produce a table".into()));
        }
        Command::StokesSolve | Command::StokesConv => stokes_study(cfg)?.table(),
        Command::StokesEig => eigen_study(cfg)?.table(),
        Command::Infsup => infsup_study(cfg)?.table(),
        Command::Biharmonic => biharmonic_study(cfg)?.table(),
    })
}

/// Runs a parsed configuration. Tables go to `--out` as CSV, with an aligned
/// copy on `stdout`; without `--out` the CSV goes to `stdout`.
pub fn execute(cfg: &StudyConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Output {
        path: "standard output".into(),
        source: e,
    };
    if cfg.command == Command::Mesh {
        for l in mesh_command(cfg)? {
            writeln!(stdout, "{l}").map_err(io)?;
        }
        return Ok(());
    }
    let table = study_table(cfg)?;
    match &cfg.out {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Output {
                path: p.display().to_string(),
                source: e,
            })?;
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush().map_err(|e| CliError::Output {
                path: p.display().to_string(),
                source: e,
            })?;
            write!(stdout, "{}", table.render()).map_err(io)?;
        }
        None => table.write_csv(stdout)?,
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match StudyConfig::from_cli(cli).and_then(|cfg| execute(&cfg, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
