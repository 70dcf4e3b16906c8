//! Run manifests: everything needed to regenerate one output file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{metric_curve, sweep_spectrum, MetricMode, SolverOptions};
use crate::config::fmt_f64;
use crate::params::ChainConfig;
use crate::presets::GridSpec;
use crate::{Error, Result};

pub const SPECTRUM_HEADER: &str = "delta_p_hz,T,phase_rad,tau_g_s";
pub const METRICS_HEADER: &str = "omega_hz,value";

/// What was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunSpec {
    Spectrum { grid: GridSpec },
    Metrics { delta_p: f64, omegas: GridSpec, mode: MetricMode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// CLI command that produced the output.
    pub command: String,
    /// Figure id and curve label for reproduction runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    pub config: ChainConfig,
    pub run: RunSpec,
    pub options: SolverOptions,
    pub output: PathBuf,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: ChainConfig, run: RunSpec, options: SolverOptions, output: PathBuf) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            figure: None,
            curve: None,
            config,
            run,
            options,
            output,
            wall_clock_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("manifest: {e}")))
    }
}

/// Manifest path written next to an output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Compute the CSV text of a run.
pub fn render(config: &ChainConfig, run: &RunSpec, options: &SolverOptions) -> Result<String> {
    match run {
        RunSpec::Spectrum { grid } => {
            if grid.points < 3 {
                return Err(Error::Grid(format!("need at least 3 points, got {}", grid.points)));
            }
            let s = sweep_spectrum(config, &grid.values()?, options)?;
            let mut out = String::from(SPECTRUM_HEADER);
            out.push('\n');
            for i in 0..s.grid.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(s.grid[i]),
                    fmt_f64(s.transmission[i]),
                    fmt_f64(s.phase[i]),
                    fmt_f64(s.tau_g[i])
                );
            }
            Ok(out)
        }
        RunSpec::Metrics { delta_p, omegas, mode } => {
            let w = omegas.values()?;
            let values = metric_curve(config, *delta_p, &w, *mode, options)?;
            let mut out = String::from(METRICS_HEADER);
            out.push('\n');
            for (x, v) in w.iter().zip(values) {
                let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(v));
            }
            Ok(out)
        }
    }
}

/// Write `contents` to `path` through a temporary file in the same directory
/// and an atomic rename, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Re-run a manifest, writing the CSV to `output` (or to the path recorded in
/// the manifest). Returns the path written.
pub fn replay_manifest(manifest: &Path, output: Option<&Path>) -> Result<PathBuf> {
    let m = RunManifest::from_json(&std::fs::read_to_string(manifest)?)?;
    m.config.validate()?;
    let csv = render(&m.config, &m.run, &m.options)?;
    let target = output.map_or_else(|| m.output.clone(), Path::to_path_buf);
    write_atomic(&target, &csv)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::single_resonator;

    #[test]
    fn manifest_json_round_trips() {
        let mut c = single_resonator();
        c.resonators[0].spin_rate = -0.0;
        let m = RunManifest::new(
            "spectrum",
            c,
            RunSpec::Spectrum { grid: GridSpec { min: -1e6, max: 1e6, points: 5 } },
            SolverOptions::default(),
            PathBuf::from("out.csv"),
        );
        let back = RunManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(back.config.resonators[0].spin_rate.is_sign_negative());
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("a/b/s.csv")), PathBuf::from("a/b/s.csv.manifest.json"));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn spectrum_rows_match_grid() {
        let csv = render(
            &single_resonator(),
            &RunSpec::Spectrum { grid: GridSpec { min: 30e6, max: 31e6, points: 3 } },
            &SolverOptions::default(),
        )
        .unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SPECTRUM_HEADER);
        assert_eq!(lines.len(), 4);
        for line in &lines[1..] {
            let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(cols.len(), 4);
            assert!(cols.iter().all(|v| v.is_finite()));
        }
        assert!(lines[1].starts_with("30000000.0,"));
    }
}
