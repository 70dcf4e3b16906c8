//! Built-in chains and the figure runs shipped with the CLI.

use serde::{Deserialize, Serialize};

use crate::analysis::{linspace, MetricMode};
use crate::config::parse_config;
use crate::params::{ChainConfig, DriveSpec, ResonatorSpec};
use crate::steady::solve_steady_single_oracle;
use crate::{Error, Result};

/// Source text of the single-resonator preset.
pub const SINGLE_CFG: &str = include_str!("../presets/single.cfg");
/// Source text of the two-resonator preset.
pub const PAIR_CFG: &str = include_str!("../presets/pair.cfg");

pub const FIGURE_IDS: [&str; 9] = ["fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4", "fig5", "fig6"];

/// Probe detuning at which the spin-rate sweeps are evaluated, Hz.
pub const METRIC_DETUNING: f64 = 10e6;

pub fn single_resonator() -> ChainConfig {
    parse_config(SINGLE_CFG).expect("bundled single-resonator preset parses")
}

/// Two-resonator preset with coupling `j_over_kappa · κ_ex`.
pub fn resonator_pair(j_over_kappa: f64) -> ChainConfig {
    let mut c = parse_config(PAIR_CFG).expect("bundled two-resonator preset parses");
    c.couplings = vec![j_over_kappa * c.drive.kappa_ex];
    c
}

/// Pump frequency meeting the red-sideband condition `Δ_c − ξx = ω_m` for a
/// single resonator at rest, found by fixed-point iteration on the
/// closed-form steady state.
pub fn calibrate_pump_frequency(spec: &ResonatorSpec, drive: &DriveSpec) -> Result<f64> {
    let rest = ResonatorSpec { spin_rate: 0.0, ..*spec };
    let mut omega_l = rest.omega_c - rest.omega_m;
    for _ in 0..200 {
        let d = DriveSpec { omega_l, ..*drive };
        let ss = solve_steady_single_oracle(&rest, &d)?;
        let next = rest.omega_c - rest.omega_m - rest.xi * ss.x;
        if next == omega_l {
            return Ok(next);
        }
        omega_l = next;
    }
    Ok(omega_l)
}

/// Spin state of one resonator in a figure curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Cw,
    Ccw,
    Rest,
}

impl Spin {
    fn sign(self) -> f64 {
        match self {
            Spin::Cw => 1.0,
            Spin::Ccw => -1.0,
            Spin::Rest => 0.0,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Spin::Cw => "cw",
            Spin::Ccw => "ccw",
            Spin::Rest => "rest",
        }
    }
}

/// Evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        linspace(self.min, self.max, self.points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// Transmission spectrum over Δ_p.
    Spectrum { grid: GridSpec },
    /// A metric against spin-rate magnitude at fixed Δ_p.
    Metric { delta_p: f64, omegas: GridSpec, mode: MetricMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config: ChainConfig,
    pub kind: CurveKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: &'static str,
    pub curves: Vec<Curve>,
}

fn spun(mut config: ChainConfig, spins: &[Spin], magnitude: f64) -> ChainConfig {
    for (spec, s) in config.resonators.iter_mut().zip(spins) {
        spec.spin_rate = s.sign() * magnitude;
    }
    config
}

fn label(spins: &[Spin]) -> String {
    let mut s = format!("n{}", spins.len());
    for spin in spins {
        s.push('_');
        s.push_str(spin.tag());
    }
    s
}

const PAIR_CASES: [[Spin; 2]; 6] = [
    [Spin::Cw, Spin::Cw],
    [Spin::Cw, Spin::Ccw],
    [Spin::Ccw, Spin::Cw],
    [Spin::Ccw, Spin::Ccw],
    [Spin::Cw, Spin::Rest],
    [Spin::Ccw, Spin::Rest],
];

fn spectrum(spins: &[Spin], magnitude: f64, grid: GridSpec) -> Curve {
    let base = if spins.len() == 1 { single_resonator() } else { resonator_pair(1.0) };
    Curve { label: label(spins), config: spun(base, spins, magnitude), kind: CurveKind::Spectrum { grid } }
}

fn metric_curves(mode: MetricMode) -> Vec<Curve> {
    let omegas = GridSpec { min: 0.0, max: 120e3, points: 121 };
    let kind = CurveKind::Metric { delta_p: METRIC_DETUNING, omegas, mode };
    let mut cases: Vec<Vec<Spin>> = vec![vec![Spin::Cw], vec![Spin::Ccw]];
    cases.extend(PAIR_CASES.iter().map(|c| c.to_vec()));
    cases
        .iter()
        .map(|spins| {
            let base = if spins.len() == 1 { single_resonator() } else { resonator_pair(1.0) };
            // unit magnitude only records the direction pattern
            Curve { label: label(spins), config: spun(base, spins, 1.0), kind: kind.clone() }
        })
        .collect()
}

/// Curves of one shipped figure run.
pub fn figure(id: &str) -> Result<Figure> {
    let wide = GridSpec { min: -40e6, max: 40e6, points: 2001 };
    let fast = GridSpec { min: -60e6, max: 60e6, points: 3001 };
    let zoom = GridSpec { min: 20e6, max: 50e6, points: 1501 };
    let (id, curves) = match id {
        "fig2a" => {
            let mut curves = vec![spectrum(&[Spin::Rest], 0.0, wide)];
            for (j, tag) in [(0.2, "0.2"), (1.0, "1"), (2.0, "2")] {
                curves.push(Curve {
                    label: format!("n2_j{tag}"),
                    config: resonator_pair(j),
                    kind: CurveKind::Spectrum { grid: wide },
                });
            }
            ("fig2a", curves)
        }
        "fig2b" | "fig2c" => {
            let (first, other, id) =
                if id == "fig2b" { (Spin::Cw, Spin::Ccw, "fig2b") } else { (Spin::Ccw, Spin::Cw, "fig2c") };
            let cases: [&[Spin]; 4] = [&[first], &[first, first], &[first, other], &[first, Spin::Rest]];
            (id, cases.iter().map(|s| spectrum(s, 40e3, wide)).collect())
        }
        "fig3a" => ("fig3a", vec![spectrum(&[Spin::Cw], 100e3, fast), spectrum(&[Spin::Ccw], 100e3, fast)]),
        "fig3b" => {
            let cases: [&[Spin]; 4] =
                [&[Spin::Cw, Spin::Cw], &[Spin::Ccw, Spin::Ccw], &[Spin::Cw, Spin::Rest], &[Spin::Ccw, Spin::Rest]];
            ("fig3b", cases.iter().map(|s| spectrum(s, 100e3, fast)).collect())
        }
        "fig3c" => {
            let cases: [&[Spin]; 2] = [&[Spin::Cw, Spin::Ccw], &[Spin::Ccw, Spin::Cw]];
            ("fig3c", cases.iter().map(|s| spectrum(s, 100e3, fast)).collect())
        }
        "fig4" => ("fig4", PAIR_CASES.iter().map(|s| spectrum(s, 100e3, zoom)).collect()),
        "fig5" => ("fig5", metric_curves(MetricMode::Ef)),
        "fig6" => ("fig6", metric_curves(MetricMode::Tau)),
        other => return Err(Error::invalid(format!("unknown figure `{other}`; valid ids: {}", FIGURE_IDS.join(", ")))),
    };
    Ok(Figure { id, curves })
}
