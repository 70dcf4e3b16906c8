//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 solver failure,
//! 3 I/O failure. Every CSV is written atomically together with a
//! `<file>.manifest.json` describing how to regenerate it; nothing is written
//! until all requested results have been computed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{MetricMode, SolverOptions};
use crate::config::load_config;
use crate::manifest::{manifest_path, render, write_atomic, RunManifest, RunSpec};
use crate::presets::{figure, CurveKind, GridSpec};
use crate::response::MechanicalLine;
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spinchain", version, about = "Probe transmission of spinning optomechanical resonator chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Ef,
    Gd,
    Tau,
}

impl From<Mode> for MetricMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Ef => MetricMode::Ef,
            Mode::Gd => MetricMode::Gd,
            Mode::Tau => MetricMode::Tau,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission, phase and group delay against probe detuning.
    Spectrum {
        /// Chain configuration file.
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        dp_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        dp_max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
        /// Use the uncorrected mechanical susceptibility ω_m² − η − iηγ_m.
        #[arg(long, hide = true)]
        printed_mechanical_line: bool,
    },
    /// Enhancement factor, group-delay enhancement or group delay against
    /// spin-rate magnitude. Spin signs in the config pick the directions.
    Metrics {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        dp: f64,
        #[arg(long)]
        omega_min: f64,
        #[arg(long)]
        omega_max: f64,
        #[arg(long)]
        points: usize,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, hide = true)]
        printed_mechanical_line: bool,
    },
    /// Regenerate the data behind one of the shipped figure runs.
    Reproduce {
        /// One of fig2a, fig2b, fig2c, fig3a, fig3b, fig3c, fig4, fig5, fig6.
        figure: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::InvalidParameter(_) | Error::Config(_) | Error::Grid(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

fn options(printed: bool) -> SolverOptions {
    let mut o = SolverOptions::default();
    if printed {
        o.response.mechanical_line = MechanicalLine::AsPrinted;
    }
    o
}

struct Job {
    manifest: RunManifest,
}

fn execute(jobs: Vec<Job>) -> Result<Vec<PathBuf>> {
    let mut rendered = Vec::with_capacity(jobs.len());
    for mut job in jobs {
        let start = Instant::now();
        let m = &job.manifest;
        let csv = render(&m.config, &m.run, &m.options)?;
        job.manifest.wall_clock_s = start.elapsed().as_secs_f64();
        rendered.push((job.manifest, csv));
    }
    let mut written = Vec::with_capacity(rendered.len());
    for (m, csv) in rendered {
        write_atomic(&m.output, &csv)?;
        write_atomic(&manifest_path(&m.output), &m.to_json())?;
        written.push(m.output);
    }
    Ok(written)
}

fn plan(command: Command) -> Result<Vec<Job>> {
    match command {
        Command::Spectrum { config, dp_min, dp_max, points, out, printed_mechanical_line } => {
            let c = load_config(&config)?;
            let run = RunSpec::Spectrum { grid: GridSpec { min: dp_min, max: dp_max, points } };
            // fail on a bad grid before any solve
            if points < 3 {
                return Err(Error::Grid(format!("--points must be >= 3, got {points}")));
            }
            GridSpec { min: dp_min, max: dp_max, points }.values()?;
            Ok(vec![Job { manifest: RunManifest::new("spectrum", c, run, options(printed_mechanical_line), out) }])
        }
        Command::Metrics { config, dp, omega_min, omega_max, points, mode, out, printed_mechanical_line } => {
            let c = load_config(&config)?;
            let omegas = GridSpec { min: omega_min, max: omega_max, points };
            if omega_min < 0.0 {
                return Err(Error::Grid("--omega-min must be >= 0".into()));
            }
            omegas.values()?;
            let run = RunSpec::Metrics { delta_p: dp, omegas, mode: mode.into() };
            Ok(vec![Job { manifest: RunManifest::new("metrics", c, run, options(printed_mechanical_line), out) }])
        }
        Command::Reproduce { figure: id, out_dir } => {
            let fig = figure(&id)?;
            std::fs::create_dir_all(&out_dir)?;
            Ok(fig
                .curves
                .into_iter()
                .map(|curve| {
                    let run = match curve.kind {
                        CurveKind::Spectrum { grid } => RunSpec::Spectrum { grid },
                        CurveKind::Metric { delta_p, omegas, mode } => RunSpec::Metrics { delta_p, omegas, mode },
                    };
                    let out = out_dir.join(format!("{}_{}.csv", fig.id, curve.label));
                    let mut manifest = RunManifest::new("reproduce", curve.config, run, SolverOptions::default(), out);
                    manifest.figure = Some(fig.id.to_string());
                    manifest.curve = Some(curve.label);
                    Job { manifest }
                })
                .collect())
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match plan(cli.command).and_then(execute) {
        Ok(paths) => {
            for p in paths {
                println!("{}", display(&p));
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("spinchain: error: {e}");
            exit_code(&e)
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
