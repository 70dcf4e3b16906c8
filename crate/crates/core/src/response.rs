//! Weak-probe linear response around the steady state.
//!
//! At probe offset η = ω_p − ω_l the fluctuation amplitudes solve a 3N×3N
//! complex linear system. Unknowns are ordered
//! `(δa_−1..δa_−N, δa*_+1..δa*_+N, δx_1..δx_N)`, where δa*_+j is the complex
//! conjugate of the upper-sideband amplitude δa_+j and is stored as such.
//!
//! ```text
//! (β_j + iD_j − iη) δa_−j − iξ_j a_j δx_j + iJ (δa_−(j±1))   = √κ_ex ε_p δ_j1
//! (β_j − iD_j − iη) δa*_+j + iξ_j a_j* δx_j − iJ (δa*_+(j±1)) = 0
//! Γ_j δx_j − (ħ ξ_j / m_j)(a_j* δa_−j + a_j δa*_+j)          = 0
//! ```
//!
//! with `D_j = Δ_c,j − ξ_j x_j` and `Γ_j = ω_m² − iγ_m η − η²`. The probe
//! transmission amplitude is `t_p = 1 − (√κ_ex / ε_p) δa_−1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{decay_rate, effective_detuning, ChainConfig, DriveSpec, ResonatorSpec, HBAR};
use crate::steady::SteadyState;
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Form of the mechanical susceptibility in the displacement rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanicalLine {
    /// `ω_m² − iγ_m η − η²`.
    #[default]
    Physical,
    /// `ω_m² − η − iηγ_m`, dimensionally inconsistent; kept for comparison
    /// only.
    AsPrinted,
}

impl MechanicalLine {
    pub fn susceptibility(self, spec: &ResonatorSpec, eta: f64) -> Complex64 {
        let wm2 = spec.omega_m * spec.omega_m;
        match self {
            MechanicalLine::Physical => Complex64::new(wm2 - eta * eta, -spec.gamma_m * eta),
            MechanicalLine::AsPrinted => Complex64::new(wm2 - eta, -eta * spec.gamma_m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseOptions {
    pub mechanical_line: MechanicalLine,
    /// Largest steady-state residual accepted as a linearization point.
    pub steady_tol: f64,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        ResponseOptions { mechanical_line: MechanicalLine::Physical, steady_tol: 1e-12 }
    }
}

/// Componentwise backward error accepted for a response solve.
pub const RESPONSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    /// Probe offset η = ω_p − ω_l, Hz.
    pub eta: f64,
    pub delta_a_minus: Vec<Complex64>,
    /// Conjugated upper-sideband amplitudes δa*_+j.
    pub delta_a_plus_conj: Vec<Complex64>,
    pub delta_x: Vec<Complex64>,
    /// Probe transmission amplitude t_p.
    pub t_p: Complex64,
    /// Transmission rate T = |t_p|².
    pub transmission: f64,
    /// Componentwise backward error of the linear solve.
    pub residual: f64,
}

impl ResponsePoint {
    /// Upper-sideband amplitudes δa_+j.
    pub fn delta_a_plus(&self) -> Vec<Complex64> {
        self.delta_a_plus_conj.iter().map(|v| v.conj()).collect()
    }
}

/// Assembled fluctuation system `matrix · u = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
}

impl LinearSystem {
    /// Largest |row − col| over the nonzero entries.
    pub fn bandwidth(&self) -> usize {
        let (rows, cols) = self.matrix.shape();
        let mut width = 0;
        for r in 0..rows {
            for c in 0..cols {
                if self.matrix[(r, c)] != Complex64::new(0.0, 0.0) {
                    width = width.max(r.abs_diff(c));
                }
            }
        }
        width
    }

    /// Componentwise (Oettli–Prager) backward error of a candidate solution.
    pub fn backward_error(&self, u: &DVector<Complex64>) -> f64 {
        let n = self.rhs.len();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            let mut lhs = Complex64::new(0.0, 0.0);
            let mut scale = self.rhs[r].norm();
            for c in 0..n {
                let term = self.matrix[(r, c)] * u[c];
                lhs += term;
                scale += term.norm();
            }
            let err = (lhs - self.rhs[r]).norm();
            if err > 0.0 {
                worst = worst.max(if scale > 0.0 { err / scale } else { f64::INFINITY });
            }
        }
        worst
    }
}

/// Probe offset η for a point on the plotted axis Δ_p = η − ω_m,1.
pub fn eta_from_delta_p(config: &ChainConfig, delta_p: f64) -> f64 {
    delta_p + config.resonators[0].omega_m
}

pub fn delta_p_from_eta(config: &ChainConfig, eta: f64) -> f64 {
    eta - config.resonators[0].omega_m
}

fn probe_drive(drive: &DriveSpec, eta: f64) -> Result<f64> {
    let omega_p = drive.omega_l + eta;
    if !(omega_p > 0.0) {
        return Err(Error::invalid(format!("probe frequency ω_l + η = {omega_p} Hz is not positive")));
    }
    if !(drive.probe_power > 0.0) {
        return Err(Error::invalid("probe_power_w must be > 0 to evaluate a transmission"));
    }
    Ok(drive.probe_amplitude(omega_p))
}

pub fn assemble_system(
    ss: &SteadyState,
    config: &ChainConfig,
    eta: f64,
    opts: &ResponseOptions,
) -> Result<LinearSystem> {
    if !(ss.residual <= opts.steady_tol) {
        return Err(Error::NotConverged { residual: ss.residual, tol: opts.steady_tol });
    }
    let n = config.len();
    if ss.a.len() != n || ss.x.len() != n {
        return Err(Error::invalid("steady state does not match the chain length"));
    }
    if !eta.is_finite() {
        return Err(Error::invalid("probe offset must be finite"));
    }
    let drive = &config.drive;
    let eps_p = probe_drive(drive, eta)?;

    let mut m = DMatrix::<Complex64>::zeros(3 * n, 3 * n);
    for (j, spec) in config.resonators.iter().enumerate() {
        let beta = decay_rate(spec, drive, j == 0);
        let d = effective_detuning(spec, drive) - spec.xi * ss.x[j];
        let a = ss.a[j];
        let (ra, rb, rx) = (j, n + j, 2 * n + j);

        m[(ra, ra)] = Complex64::new(beta, d - eta);
        m[(ra, rx)] = -I * spec.xi * a;

        m[(rb, rb)] = Complex64::new(beta, -d - eta);
        m[(rb, rx)] = I * spec.xi * a.conj();

        let pull = HBAR * spec.xi / spec.mass;
        m[(rx, ra)] = -pull * a.conj();
        m[(rx, rb)] = -pull * a;
        m[(rx, rx)] = opts.mechanical_line.susceptibility(spec, eta);

        if j + 1 < n {
            let jj = config.coupling(j);
            m[(ra, ra + 1)] = I * jj;
            m[(ra + 1, ra)] = I * jj;
            m[(rb, rb + 1)] = -I * jj;
            m[(rb + 1, rb)] = -I * jj;
        }
    }
    let mut rhs = DVector::zeros(3 * n);
    rhs[0] = Complex64::new(drive.kappa_ex.sqrt() * eps_p, 0.0);
    Ok(LinearSystem { matrix: m, rhs })
}

/// Solve the fluctuation system at one probe offset.
pub fn solve_response(
    ss: &SteadyState,
    config: &ChainConfig,
    eta: f64,
    opts: &ResponseOptions,
) -> Result<ResponsePoint> {
    let system = assemble_system(ss, config, eta, opts)?;
    let u = solve_equilibrated(&system).ok_or(Error::SingularSystem { eta })?;
    let residual = system.backward_error(&u);
    if !(residual <= RESPONSE_TOL) {
        return Err(Error::SingularSystem { eta });
    }
    let n = config.len();
    let drive = &config.drive;
    let eps_p = probe_drive(drive, eta)?;
    let t_p = Complex64::new(1.0, 0.0) - drive.kappa_ex.sqrt() / eps_p * u[0];
    Ok(ResponsePoint {
        eta,
        delta_a_minus: u.rows(0, n).iter().copied().collect(),
        delta_a_plus_conj: u.rows(n, n).iter().copied().collect(),
        delta_x: u.rows(2 * n, n).iter().copied().collect(),
        t_p,
        transmission: t_p.norm_sqr(),
        residual,
    })
}

/// Row-equilibrated LU solve with one step of iterative refinement.
fn solve_equilibrated(system: &LinearSystem) -> Option<DVector<Complex64>> {
    let mut m = system.matrix.clone();
    let mut b = system.rhs.clone();
    for r in 0..m.nrows() {
        let s = m.row(r).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return None;
        }
        m.row_mut(r).scale_mut(1.0 / s);
        b[r] /= s;
    }
    let lu = m.clone().lu();
    let mut u = lu.solve(&b)?;
    let r = &b - &m * &u;
    if let Some(du) = lu.solve(&r) {
        u += du;
    }
    u.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(u)
}

/// δa_−1 for a single resonator by elimination of the sideband and
/// displacement rows, independent of the matrix path.
pub fn closed_form_single(
    ss: &SteadyState,
    spec: &ResonatorSpec,
    drive: &DriveSpec,
    eta: f64,
    line: MechanicalLine,
) -> Result<Complex64> {
    let eps_p = probe_drive(drive, eta)?;
    let a = ss.a[0];
    let beta = decay_rate(spec, drive, true);
    let d = effective_detuning(spec, drive) - spec.xi * ss.x[0];
    let lower = Complex64::new(beta, d - eta);
    let upper = Complex64::new(beta, -d - eta);
    let gamma = line.susceptibility(spec, eta);
    let g = HBAR * spec.xi * spec.xi * a.norm_sqr();
    let dressed = spec.mass * upper * gamma + I * g;
    let source = drive.kappa_ex.sqrt() * eps_p;
    Ok(source * dressed / (lower * dressed - I * g * upper))
}

/// Transmission amplitude from a lower-sideband amplitude δa_−1.
pub fn transmission_amplitude(drive: &DriveSpec, eta: f64, delta_a_minus_1: Complex64) -> Result<Complex64> {
    let eps_p = probe_drive(drive, eta)?;
    Ok(Complex64::new(1.0, 0.0) - drive.kappa_ex.sqrt() / eps_p * delta_a_minus_1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProbeDirection;
    use crate::steady::{solve_steady, SteadyOptions};
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
            omega_l: 193_499_799_937_661.03,
            pump_power: 10e-3,
            probe_power: 1e-6,
            kappa_ex: 6.45e6,
            direction: ProbeDirection::Forward,
            pump_all: true,
        }
    }

    fn solved(config: &ChainConfig) -> SteadyState {
        solve_steady(config, &SteadyOptions::default()).unwrap()
    }

    #[test]
    fn matrix_matches_symbolic_coefficients() {
        // sympy substitution into the fluctuation equations, η = ω_m + 1 MHz
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        let ss = solved(&config);
        let sys = assemble_system(&ss, &config, 201e6, &ResponseOptions::default()).unwrap();
        let expected = [
            [(6450000.0, -1000000.0093425927), (0.0, 0.0), (-6.873232312143251e21, -2.216617420769743e20)],
            [(0.0, 0.0), (6450000.0, -400999999.9906574), (-6.873232312143251e21, 2.216617420769743e20)],
            [
                (-0.011687911305075007, -0.3624158544040009),
                (-0.011687911305075007, 0.3624158544040009),
                (-401000000000000.0, -40200000000000.0),
            ],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, &(re, im)) in row.iter().enumerate() {
                let got = sys.matrix[(r, c)];
                let want = Complex64::new(re, im);
                assert!((got - want).norm() <= 1e-9 * want.norm().max(1.0), "({r},{c}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn uncoupled_cavity_is_diagonal() {
        let s = ResonatorSpec { xi: 0.0, ..spec() };
        let config = ChainConfig::new(vec![s], vec![], drive()).unwrap();
        let ss = solved(&config);
        let eta = 199.3e6;
        let sys = assemble_system(&ss, &config, eta, &ResponseOptions::default()).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_eq!(sys.matrix[(r, c)], Complex64::new(0.0, 0.0));
                }
            }
        }
        let p = solve_response(&ss, &config, eta, &ResponseOptions::default()).unwrap();
        let eps = config.drive.probe_amplitude(config.drive.omega_l + eta);
        let delta = effective_detuning(&s, &config.drive);
        let want = config.drive.kappa_ex.sqrt() * eps / Complex64::new(6.45e6, delta - eta);
        assert_relative_eq!(p.delta_a_minus[0].re, want.re, max_relative = 1e-12);
        assert_relative_eq!(p.delta_a_minus[0].im, want.im, max_relative = 1e-12);
    }

    #[test]
    fn bandwidth_bound() {
        for n in 1..=4 {
            let config = ChainConfig::new(vec![spec(); n], vec![3e6; n - 1], drive()).unwrap();
            let ss = solved(&config);
            let sys = assemble_system(&ss, &config, 200e6, &ResponseOptions::default()).unwrap();
            assert!(sys.bandwidth() <= 2 * n + 1);
        }
    }

    #[test]
    fn closed_form_agrees_with_general_solve() {
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        let ss = solved(&config);
        for k in 0..=100 {
            let eta = 160e6 + 0.8e6 * k as f64;
            let p = solve_response(&ss, &config, eta, &ResponseOptions::default()).unwrap();
            let c =
                closed_form_single(&ss, &config.resonators[0], &config.drive, eta, MechanicalLine::Physical).unwrap();
            assert!((p.delta_a_minus[0] - c).norm() <= 1e-10 * c.norm());
            assert!(p.residual <= RESPONSE_TOL);
        }
    }

    #[test]
    fn zero_response_means_full_transmission() {
        let t = transmission_amplitude(&drive(), 2e8, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(t.norm_sqr(), 1.0);
    }

    #[test]
    fn stiff_mechanics_freeze_out() {
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        let ss = solved(&config);
        let eta = 200.5e6;
        let bare = {
            let s = spec();
            let d = effective_detuning(&s, &config.drive) - s.xi * ss.x[0];
            let eps = config.drive.probe_amplitude(config.drive.omega_l + eta);
            config.drive.kappa_ex.sqrt() * eps / Complex64::new(6.45e6, d - eta)
        };
        let stiff = ResonatorSpec { gamma_m: 1e20, ..spec() };
        let c = closed_form_single(&ss, &stiff, &config.drive, eta, MechanicalLine::Physical).unwrap();
        assert_relative_eq!(c.norm(), bare.norm(), max_relative = 1e-6);
    }

    #[test]
    fn printed_mechanical_line_differs() {
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        let ss = solved(&config);
        let opts = ResponseOptions { mechanical_line: MechanicalLine::AsPrinted, ..Default::default() };
        let p = solve_response(&ss, &config, 200e6, &opts).unwrap();
        let q = solve_response(&ss, &config, 200e6, &ResponseOptions::default()).unwrap();
        assert!((p.transmission - q.transmission).abs() > 1e-3);
        let c =
            closed_form_single(&ss, &config.resonators[0], &config.drive, 200e6, MechanicalLine::AsPrinted).unwrap();
        assert!((p.delta_a_minus[0] - c).norm() <= 1e-10 * c.norm());
    }

    #[test]
    fn unconverged_steady_state_is_refused() {
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        let mut ss = solved(&config);
        ss.residual = 1e-6;
        let err = solve_response(&ss, &config, 2e8, &ResponseOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
    }

    #[test]
    fn axis_mapping_round_trips() {
        let config = ChainConfig::new(vec![spec()], vec![], drive()).unwrap();
        assert_eq!(eta_from_delta_p(&config, 0.0), 200e6);
        assert_eq!(delta_p_from_eta(&config, eta_from_delta_p(&config, -3.5e6)), -3.5e6);
    }
}
