//! Physical parameters of a resonator chain and the quantities derived from them.
//!
//! Frequencies, rates and detunings are plain numbers in Hz and enter the
//! equations of motion directly as rates; no factor of 2π is applied anywhere.
//! The reference parameter set (193.5 THz mode, 200 MHz breathing mode) is
//! self-consistent only under this reading: the centrifugal pull of a resonator
//! spinning at 100 kHz then comes out at ξx ≈ 48.4 MHz.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One spinning optomechanical ring resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSpec {
    /// Effective mass of the breathing mode, kg.
    pub mass: f64,
    /// Mechanical frequency, Hz.
    pub omega_m: f64,
    /// Mechanical damping rate, Hz.
    pub gamma_m: f64,
    /// Optical mode frequency, Hz.
    pub omega_c: f64,
    /// Intrinsic optical loss rate, Hz.
    pub kappa_in: f64,
    /// Ring radius, m.
    pub radius: f64,
    pub refractive_index: f64,
    /// Material dispersion dn/dλ, 1/m.
    pub dn_dlambda: f64,
    /// Signed spin rate, Hz. Positive is clockwise, zero is at rest.
    pub spin_rate: f64,
    /// Optomechanical frequency pull per unit displacement, Hz/m.
    pub xi: f64,
}

impl ResonatorSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("mass_kg", self.mass),
            ("omega_m_hz", self.omega_m),
            ("gamma_m_hz", self.gamma_m),
            ("omega_c_hz", self.omega_c),
            ("kappa_in_hz", self.kappa_in),
            ("radius_m", self.radius),
            ("refractive_index", self.refractive_index),
            ("dn_dlambda_per_m", self.dn_dlambda),
            ("spin_rate_hz", self.spin_rate),
            ("xi_hz_per_m", self.xi),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite")));
        }
        check(self.mass > 0.0, "mass_kg must be > 0")?;
        check(self.omega_m > 0.0, "omega_m_hz must be > 0")?;
        check(self.gamma_m >= 0.0, "gamma_m_hz must be >= 0")?;
        check(self.omega_c > 0.0, "omega_c_hz must be > 0")?;
        check(self.kappa_in >= 0.0, "kappa_in_hz must be >= 0")?;
        check(self.radius > 0.0, "radius_m must be > 0")?;
        check(self.refractive_index >= 1.0, "refractive_index must be >= 1")?;
        Ok(())
    }

    /// Vacuum wavelength of the optical mode, m.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.omega_c
    }

    /// Static displacement from the centrifugal force alone, m.
    pub fn centrifugal_displacement(&self) -> f64 {
        self.radius * self.spin_rate * self.spin_rate / (self.omega_m * self.omega_m)
    }

    /// Displacement produced per intracavity photon, m.
    pub fn displacement_per_photon(&self) -> f64 {
        HBAR * self.xi / (self.mass * self.omega_m * self.omega_m)
    }
}

/// Launch direction of pump and probe along the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProbeDirection {
    #[default]
    Forward,
    Backward,
}

impl ProbeDirection {
    /// Sign applied to every spin rate inside the Sagnac term.
    pub fn spin_sign(self) -> f64 {
        match self {
            ProbeDirection::Forward => 1.0,
            ProbeDirection::Backward => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            ProbeDirection::Forward => ProbeDirection::Backward,
            ProbeDirection::Backward => ProbeDirection::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeDirection::Forward => "forward",
            ProbeDirection::Backward => "backward",
        }
    }
}

impl std::str::FromStr for ProbeDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "forward" => Ok(ProbeDirection::Forward),
            "backward" => Ok(ProbeDirection::Backward),
            other => Err(format!("expected `forward` or `backward`, got `{other}`")),
        }
    }
}

/// Pump and probe drive shared by the whole chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Pump frequency ω_l, Hz.
    pub omega_l: f64,
    /// Pump power, W.
    pub pump_power: f64,
    /// Probe power, W.
    pub probe_power: f64,
    /// Fiber coupling rate of resonator 1, Hz.
    pub kappa_ex: f64,
    pub direction: ProbeDirection,
    /// Drive every resonator with the pump term (as the Hamiltonian is
    /// written) rather than resonator 1 only.
    pub pump_all: bool,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        check(self.omega_l.is_finite() && self.omega_l > 0.0, "omega_l_hz must be finite and > 0")?;
        check(self.pump_power.is_finite() && self.pump_power >= 0.0, "pump_power_w must be finite and >= 0")?;
        check(self.probe_power.is_finite() && self.probe_power >= 0.0, "probe_power_w must be finite and >= 0")?;
        check(self.kappa_ex.is_finite() && self.kappa_ex > 0.0, "kappa_ex_hz must be finite and > 0")?;
        Ok(())
    }

    /// Pump amplitude ε_l = sqrt(P_l / (ħ ω_l)), in √(photons/s).
    pub fn pump_amplitude(&self) -> f64 {
        (self.pump_power / (HBAR * self.omega_l)).sqrt()
    }

    /// Probe amplitude ε_p = sqrt(P_in / (ħ ω_p)) at probe frequency `omega_p`.
    pub fn probe_amplitude(&self, omega_p: f64) -> f64 {
        (self.probe_power / (HBAR * omega_p)).sqrt()
    }
}

/// A series-coupled chain: resonator 1 touches the fiber, resonator N is on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub resonators: Vec<ResonatorSpec>,
    /// Nearest-neighbour couplings J_{j,j+1}, Hz. Length N − 1.
    pub couplings: Vec<f64>,
    pub drive: DriveSpec,
}

impl ChainConfig {
    pub fn new(resonators: Vec<ResonatorSpec>, couplings: Vec<f64>, drive: DriveSpec) -> Result<Self> {
        let config = ChainConfig { resonators, couplings, drive };
        config.validate()?;
        Ok(config)
    }

    pub fn len(&self) -> usize {
        self.resonators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resonators.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.resonators.is_empty(), "chain needs at least one resonator")?;
        if self.couplings.len() + 1 != self.resonators.len() {
            return Err(Error::invalid(format!(
                "coupling_j_hz has {} entries, expected {} for {} resonators",
                self.couplings.len(),
                self.resonators.len() - 1,
                self.resonators.len()
            )));
        }
        check(
            self.couplings.iter().all(|j| j.is_finite() && *j >= 0.0),
            "coupling_j_hz entries must be finite and >= 0",
        )?;
        for (k, spec) in self.resonators.iter().enumerate() {
            spec.validate().map_err(|e| Error::invalid(format!("resonator {}: {e}", k + 1)))?;
        }
        self.drive.validate()
    }

    /// Coupling between resonators `j` and `j + 1` (0-based), zero past the ends.
    pub fn coupling(&self, j: usize) -> f64 {
        self.couplings.get(j).copied().unwrap_or(0.0)
    }

    /// Copy with the launch direction reversed.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.drive.direction = self.drive.direction.reversed();
        out
    }

    /// Copy in which every spinning resonator turns at `magnitude` while keeping
    /// its sign; resonators at rest stay at rest.
    pub fn with_spin_magnitude(&self, magnitude: f64) -> Self {
        let mut out = self.clone();
        for spec in &mut out.resonators {
            if spec.spin_rate != 0.0 {
                spec.spin_rate = magnitude.abs().copysign(spec.spin_rate);
            }
        }
        out
    }

    /// Copy with every spin rate set to zero.
    pub fn at_rest(&self) -> Self {
        let mut out = self.clone();
        for spec in &mut out.resonators {
            spec.spin_rate = 0.0;
        }
        out
    }

    /// True when the two chains differ at most in their spin rates.
    pub fn same_except_spin(&self, other: &ChainConfig) -> bool {
        self.at_rest() == other.at_rest()
    }

    /// Per-resonator decay rates and drive amplitudes.
    pub fn derived_rates(&self) -> Vec<DerivedRates> {
        derived_rates(self)
    }
}

/// Rates consumed by the solvers for one resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Amplitude decay rate β_j = ½(κ_ex δ_{j1} + κ_in), Hz.
    pub beta: f64,
    /// Pump amplitude ε_l seen by this resonator (zero when it is not pumped).
    pub pump_amplitude: f64,
    /// Probe amplitude ε_p at ω_p = ω_l + ω_m (zero except for resonator 1).
    pub probe_amplitude: f64,
    pub xi: f64,
    /// Effective cavity detuning Δ_c including the Sagnac shift, Hz.
    pub detuning: f64,
}

pub fn derived_rates(config: &ChainConfig) -> Vec<DerivedRates> {
    let drive = &config.drive;
    let pump = drive.pump_amplitude();
    config
        .resonators
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let first = j == 0;
            DerivedRates {
                beta: decay_rate(spec, drive, first),
                pump_amplitude: if first || drive.pump_all { pump } else { 0.0 },
                probe_amplitude: if first { drive.probe_amplitude(drive.omega_l + spec.omega_m) } else { 0.0 },
                xi: spec.xi,
                detuning: effective_detuning(spec, drive),
            }
        })
        .collect()
}

/// β_j: the fiber coupling only loads the bottom resonator.
pub fn decay_rate(spec: &ResonatorSpec, drive: &DriveSpec, fiber_coupled: bool) -> f64 {
    let ex = if fiber_coupled { drive.kappa_ex } else { 0.0 };
    0.5 * (ex + spec.kappa_in)
}

/// Sagnac–Fizeau shift of the optical mode, Hz. Odd in the spin rate.
pub fn sagnac_shift(spec: &ResonatorSpec) -> f64 {
    sagnac_shift_at(spec, spec.spin_rate)
}

fn sagnac_shift_at(spec: &ResonatorSpec, spin_rate: f64) -> f64 {
    let n = spec.refractive_index;
    let dispersion = spec.wavelength() / n * spec.dn_dlambda;
    n * spec.radius * spin_rate * spec.omega_c / SPEED_OF_LIGHT * (1.0 - 1.0 / n - dispersion)
}

/// Δ_c = ω_c + Δ_sag − ω_l. A backward launch sees every spin reversed.
pub fn effective_detuning(spec: &ResonatorSpec, drive: &DriveSpec) -> f64 {
    let shift = sagnac_shift_at(spec, drive.direction.spin_sign() * spec.spin_rate);
    (spec.omega_c + shift) - drive.omega_l
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec() -> ResonatorSpec {
        ResonatorSpec {
            mass: 2e-12,
            omega_m: 200e6,
            gamma_m: 0.2e6,
            omega_c: 193.5e12,
            kappa_in: 6.45e6,
            radius: 0.25e-3,
            refractive_index: 1.44,
            dn_dlambda: 0.0,
            spin_rate: 0.0,
            xi: 193.5e12 / 0.25e-3,
        }
    }

    fn drive() -> DriveSpec {
        DriveSpec {
            omega_l: 193.5e12,
            pump_power: 10.0,
            probe_power: 1e-6,
            kappa_ex: 6.45e6,
            direction: ProbeDirection::Forward,
            pump_all: true,
        }
    }

    #[test]
    fn sagnac_vanishes_at_rest_and_in_vacuum() {
        assert_eq!(sagnac_shift(&spec()), 0.0);
        let vacuum = ResonatorSpec { refractive_index: 1.0, spin_rate: 3e4, ..spec() };
        assert_eq!(sagnac_shift(&vacuum), 0.0);
    }

    #[test]
    fn sagnac_golden_value() {
        // numpy: n r Ω ω_c / c (1 − 1/n) at Ω = 100 kHz
        let s = ResonatorSpec { spin_rate: 1e5, ..spec() };
        assert_relative_eq!(sagnac_shift(&s), 7_099_911.766_292_667, max_relative = 1e-13);
    }

    #[test]
    fn sagnac_is_odd_and_linear() {
        let s = ResonatorSpec { spin_rate: 37_500.0, ..spec() };
        let neg = ResonatorSpec { spin_rate: -37_500.0, ..s };
        let dbl = ResonatorSpec { spin_rate: 75_000.0, ..s };
        assert_eq!(sagnac_shift(&neg), -sagnac_shift(&s));
        assert_relative_eq!(sagnac_shift(&dbl), 2.0 * sagnac_shift(&s), max_relative = 1e-12);
    }

    #[test]
    fn dispersion_reduces_the_shift() {
        let s = ResonatorSpec { spin_rate: 1e5, ..spec() };
        let d = ResonatorSpec { dn_dlambda: 1e4, ..s };
        let lambda = SPEED_OF_LIGHT / 193.5e12;
        let expected = sagnac_shift(&s) - 1.44 * 0.25e-3 * 1e5 * 193.5e12 / SPEED_OF_LIGHT * lambda / 1.44 * 1e4;
        assert_relative_eq!(sagnac_shift(&d), expected, max_relative = 1e-12);
    }

    #[test]
    fn detuning_cases() {
        let d = DriveSpec { omega_l: 193.5e12, ..drive() };
        assert_eq!(effective_detuning(&spec(), &d), 0.0);

        let d = DriveSpec { omega_l: 193.5e12 - 200e6, ..drive() };
        let plus = ResonatorSpec { spin_rate: 1e5, ..spec() };
        let minus = ResonatorSpec { spin_rate: -1e5, ..spec() };
        let sum = effective_detuning(&plus, &d) + effective_detuning(&minus, &d);
        assert_relative_eq!(sum, 2.0 * (193.5e12 - d.omega_l), max_relative = 1e-12);
        assert_relative_eq!(
            effective_detuning(&plus, &d) - (193.5e12 - d.omega_l),
            7_099_911.766_292_667,
            max_relative = 1e-6
        );
    }

    #[test]
    fn backward_launch_flips_the_sagnac_term() {
        let d = DriveSpec { omega_l: 193.4e12, ..drive() };
        let plus = ResonatorSpec { spin_rate: 4e4, ..spec() };
        let minus = ResonatorSpec { spin_rate: -4e4, ..spec() };
        let back = DriveSpec { direction: ProbeDirection::Backward, ..d };
        assert_eq!(effective_detuning(&plus, &back), effective_detuning(&minus, &d));
    }

    #[test]
    fn kappa_ex_from_quality_factor() {
        let kappa_ex = 193.5e12 / 3e7;
        assert_relative_eq!(kappa_ex, 6.45e6, max_relative = 1e-3);
    }

    #[test]
    fn decay_rates_and_amplitudes() {
        let config = ChainConfig::new(vec![spec(), spec()], vec![6.45e6], drive()).unwrap();
        let rates = config.derived_rates();
        assert_relative_eq!(rates[0].beta, 6.45e6, max_relative = 1e-15);
        assert_relative_eq!(rates[1].beta, 6.45e6 / 2.0, max_relative = 1e-15);
        // numpy: sqrt(10 / (ħ · 193.5e12))
        assert_relative_eq!(rates[0].pump_amplitude, 22_137_136_089.074_913, max_relative = 1e-12);
        assert_eq!(rates[1].pump_amplitude, rates[0].pump_amplitude);
        assert_eq!(rates[1].probe_amplitude, 0.0);

        let single = ChainConfig { drive: DriveSpec { pump_all: false, ..drive() }, ..config.clone() };
        assert_eq!(single.derived_rates()[1].pump_amplitude, 0.0);
        assert_eq!(config.derived_rates(), config.derived_rates());
    }

    #[test]
    fn validation_rejects_bad_chains() {
        assert!(ChainConfig::new(vec![], vec![], drive()).is_err());
        assert!(ChainConfig::new(vec![spec()], vec![1.0], drive()).is_err());
        assert!(ChainConfig::new(vec![spec(), spec()], vec![-1.0], drive()).is_err());
        let bad = ResonatorSpec { refractive_index: 0.9, ..spec() };
        assert!(ChainConfig::new(vec![bad], vec![], drive()).is_err());
        let bad = DriveSpec { kappa_ex: 0.0, ..drive() };
        assert!(ChainConfig::new(vec![spec()], vec![], bad).is_err());
        let bad = ResonatorSpec { mass: f64::NAN, ..spec() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spin_helpers_keep_signs() {
        let mut chain = ChainConfig::new(vec![spec(); 3], vec![1.0, 1.0], drive()).unwrap();
        chain.resonators[0].spin_rate = 1.0;
        chain.resonators[1].spin_rate = -1.0;
        let scaled = chain.with_spin_magnitude(4e4);
        let rates: Vec<f64> = scaled.resonators.iter().map(|r| r.spin_rate).collect();
        assert_eq!(rates, vec![4e4, -4e4, 0.0]);
        assert!(scaled.same_except_spin(&chain));
        assert!(chain.at_rest().resonators.iter().all(|r| r.spin_rate == 0.0));
        assert_eq!(chain.reversed().drive.direction, ProbeDirection::Backward);
    }
}
