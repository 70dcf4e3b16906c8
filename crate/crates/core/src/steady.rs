//! Mean-field steady state of the chain.
//!
//! For every resonator the intracavity field and the static displacement obey
//!
//! ```text
//! a_j (β_j + iΔ_j − iξ_j x_j) + iJ_{j,j−1} a_{j−1} + iJ_{j,j+1} a_{j+1} = √κ_ex ε_l
//! x_j = r_j Ω_j² / ω_m² + ħ ξ_j |a_j|² / (m_j ω_m²)
//! ```
//!
//! The field equations are linear once the displacements are fixed, so the
//! solver alternates an exact field solve with a damped displacement update
//! and falls back to Newton on the stacked real system when that stalls.
//! The pump is ramped up geometrically from almost nothing, warm-starting each
//! stage, so that under bistability the branch connected to zero power is the
//! one returned.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{decay_rate, effective_detuning, ChainConfig, DriveSpec, ResonatorSpec};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyOptions {
    /// Maximum relative residual accepted on return.
    pub tol: f64,
    /// Iteration budget for each stage of the pump ramp.
    pub max_iter: usize,
    /// Number of geometric pump-power stages, the last one at full power.
    pub ramp_steps: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { tol: 1e-12, max_iter: 100_000, ramp_steps: 20 }
    }
}

/// Damping applied to displacement updates in the fixed-point sweep.
const DAMPING: f64 = 0.5;
/// Stall window: less than 1% residual reduction over this many sweeps hands
/// the iterate to Newton.
const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Intracavity amplitudes a_j, √photons.
    pub a: Vec<Complex64>,
    /// Static displacements x_j, m.
    pub x: Vec<f64>,
    /// Maximum relative residual of the steady-state equations.
    pub residual: f64,
    pub iterations: usize,
}

impl SteadyState {
    pub fn photons(&self) -> Vec<f64> {
        self.a.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Coefficients of the steady-state equations at a given pump scale.
struct Model {
    diag: Vec<Complex64>,
    xi: Vec<f64>,
    x_spin: Vec<f64>,
    per_photon: Vec<f64>,
    couplings: Vec<f64>,
    drive: Vec<Complex64>,
}

impl Model {
    fn new(config: &ChainConfig, amplitude_scale: f64) -> Self {
        let d = &config.drive;
        let pump = d.kappa_ex.sqrt() * d.pump_amplitude() * amplitude_scale;
        let n = config.len();
        let mut m = Model {
            diag: Vec::with_capacity(n),
            xi: Vec::with_capacity(n),
            x_spin: Vec::with_capacity(n),
            per_photon: Vec::with_capacity(n),
            couplings: config.couplings.clone(),
            drive: Vec::with_capacity(n),
        };
        for (j, spec) in config.resonators.iter().enumerate() {
            let beta = decay_rate(spec, d, j == 0);
            m.diag.push(Complex64::new(beta, effective_detuning(spec, d)));
            m.xi.push(spec.xi);
            m.x_spin.push(spec.centrifugal_displacement());
            m.per_photon.push(spec.displacement_per_photon());
            let pumped = j == 0 || d.pump_all;
            m.drive.push(Complex64::new(if pumped { pump } else { 0.0 }, 0.0));
        }
        m
    }

    fn len(&self) -> usize {
        self.diag.len()
    }

    fn coupling(&self, j: usize) -> f64 {
        self.couplings.get(j).copied().unwrap_or(0.0)
    }

    /// Field matrix for fixed displacements.
    fn field_matrix(&self, x: &[f64]) -> DMatrix<Complex64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.diag[j] - I * (self.xi[j] * x[j]);
            if j + 1 < n {
                let c = I * self.coupling(j);
                m[(j, j + 1)] = c;
                m[(j + 1, j)] = c;
            }
        }
        m
    }

    fn solve_field(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let m = self.field_matrix(x);
        let index = (0..self.len()).find(|&j| m[(j, j)].norm() == 0.0).map_or(1, |j| j + 1);
        let degenerate = || Error::DegenerateCavity { index };
        let rhs = DVector::from_column_slice(&self.drive);
        let a = m.lu().solve(&rhs).ok_or_else(degenerate)?;
        if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(degenerate());
        }
        Ok(a.iter().copied().collect())
    }

    fn displacement_target(&self, a: &[Complex64]) -> Vec<f64> {
        a.iter().enumerate().map(|(j, a)| self.x_spin[j] + self.per_photon[j] * a.norm_sqr()).collect()
    }

    fn residual(&self, a: &[Complex64], x: &[f64]) -> f64 {
        let n = self.len();
        let mut field_scale = f64::MIN_POSITIVE;
        let mut field_err: f64 = 0.0;
        for j in 0..n {
            let own = (self.diag[j] - I * (self.xi[j] * x[j])) * a[j];
            let mut lhs = own;
            if j > 0 {
                lhs += I * self.coupling(j - 1) * a[j - 1];
            }
            if j + 1 < n {
                lhs += I * self.coupling(j) * a[j + 1];
            }
            field_scale = field_scale.max(self.drive[j].norm()).max(own.norm());
            field_err = field_err.max((lhs - self.drive[j]).norm());
        }
        let mut disp: f64 = 0.0;
        for j in 0..n {
            let target = self.x_spin[j] + self.per_photon[j] * a[j].norm_sqr();
            let scale = x[j].abs().max(target.abs());
            if scale > 0.0 {
                disp = disp.max((x[j] - target).abs() / scale);
            }
        }
        (field_err / field_scale).max(disp)
    }
}

enum Outcome {
    Converged,
    Stalled,
}

/// Damped alternating sweep. Returns `Stalled` when progress stops.
fn fixed_point(
    model: &Model,
    a: &mut Vec<Complex64>,
    x: &mut [f64],
    tol: f64,
    budget: usize,
    used: &mut usize,
) -> Result<Outcome> {
    let mut history: Vec<f64> = Vec::new();
    for _ in 0..budget {
        *a = model.solve_field(x)?;
        *used += 1;
        let res = model.residual(a, x);
        if res <= tol {
            return Ok(Outcome::Converged);
        }
        if !res.is_finite() {
            return Ok(Outcome::Stalled);
        }
        history.push(res);
        if history.len() > STALL_WINDOW {
            let then = history[history.len() - 1 - STALL_WINDOW];
            if res > 0.99 * then {
                return Ok(Outcome::Stalled);
            }
        }
        let target = model.displacement_target(a);
        for (xj, tj) in x.iter_mut().zip(target) {
            *xj += DAMPING * (tj - *xj);
        }
    }
    Ok(Outcome::Stalled)
}

/// Newton on the real unknowns (Re a, Im a, ξx), with backtracking.
fn newton(
    model: &Model,
    a: &mut Vec<Complex64>,
    x: &mut Vec<f64>,
    tol: f64,
    budget: usize,
    used: &mut usize,
) -> Result<bool> {
    let n = model.len();
    let field_scale = model.drive.iter().map(|d| d.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let rate_scale = model.diag.iter().map(|d| d.norm()).fold(f64::MIN_POSITIVE, f64::max);

    // scaled residual vector: field rows / field_scale, displacement rows (as ξx) / rate_scale
    let eval = |a: &[Complex64], x: &[f64]| -> DVector<f64> {
        let mut f = DVector::zeros(3 * n);
        for j in 0..n {
            let mut lhs = (model.diag[j] - I * (model.xi[j] * x[j])) * a[j];
            if j > 0 {
                lhs += I * model.coupling(j - 1) * a[j - 1];
            }
            if j + 1 < n {
                lhs += I * model.coupling(j) * a[j + 1];
            }
            let r = (lhs - model.drive[j]) / field_scale;
            f[j] = r.re;
            f[n + j] = r.im;
            let target = model.x_spin[j] + model.per_photon[j] * a[j].norm_sqr();
            f[2 * n + j] = model.xi[j] * (x[j] - target) / rate_scale;
        }
        f
    };

    for _ in 0..budget {
        *used += 1;
        if model.residual(a, x) <= tol {
            return Ok(true);
        }
        let f = eval(a, x);
        let mut jac = DMatrix::<f64>::zeros(3 * n, 3 * n);
        for j in 0..n {
            for l in 0..n {
                let m = if j == l {
                    model.diag[j] - I * (model.xi[j] * x[j])
                } else if l + 1 == j {
                    I * model.coupling(l)
                } else if j + 1 == l {
                    I * model.coupling(j)
                } else {
                    continue;
                } / field_scale;
                // d/dRe a_l and d/dIm a_l of the complex row
                jac[(j, l)] = m.re;
                jac[(n + j, l)] = m.im;
                let mi = I * m;
                jac[(j, n + l)] = mi.re;
                jac[(n + j, n + l)] = mi.im;
            }
            // d/d(ξx_j) of the field row: −i a_j
            let dx = -I * a[j] / field_scale;
            jac[(j, 2 * n + j)] = dx.re;
            jac[(n + j, 2 * n + j)] = dx.im;
            let pull = model.xi[j] * model.per_photon[j];
            jac[(2 * n + j, j)] = -2.0 * pull * a[j].re / rate_scale;
            jac[(2 * n + j, n + j)] = -2.0 * pull * a[j].im / rate_scale;
            jac[(2 * n + j, 2 * n + j)] = 1.0 / rate_scale;
        }
        let Some(step) = jac.lu().solve(&(-&f)) else {
            return Ok(false);
        };
        let merit = f.norm_squared();
        let mut lambda = 1.0;
        loop {
            let trial_a: Vec<Complex64> =
                (0..n).map(|j| a[j] + lambda * Complex64::new(step[j], step[n + j])).collect();
            let trial_x: Vec<f64> = (0..n)
                .map(|j| {
                    if model.xi[j] != 0.0 {
                        x[j] + lambda * step[2 * n + j] / model.xi[j]
                    } else {
                        model.x_spin[j] + model.per_photon[j] * trial_a[j].norm_sqr()
                    }
                })
                .collect();
            let trial = eval(&trial_a, &trial_x).norm_squared();
            if trial.is_finite() && (trial < merit || lambda < 1e-6) {
                *a = trial_a;
                *x = trial_x;
                break;
            }
            lambda *= 0.5;
        }
    }
    Ok(model.residual(a, x) <= tol)
}

fn solve_stage(
    model: &Model,
    a: &mut Vec<Complex64>,
    x: &mut Vec<f64>,
    tol: f64,
    budget: usize,
    used: &mut usize,
) -> Result<()> {
    let start = *used;
    if let Outcome::Converged = fixed_point(model, a, x, tol, budget, used)? {
        return Ok(());
    }
    let left = budget.saturating_sub(*used - start);
    if newton(model, a, x, tol, left.max(1), used)? {
        return Ok(());
    }
    Err(Error::NoConvergence { iterations: *used, residual: model.residual(a, x) })
}

/// Solve the coupled steady-state equations for the whole chain.
pub fn solve_steady(config: &ChainConfig, opts: &SteadyOptions) -> Result<SteadyState> {
    config.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("steady-state tolerance must be > 0"));
    }
    let full = Model::new(config, 1.0);
    let n = full.len();
    let mut x = full.x_spin.clone();
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut used = 0;

    if full.drive.iter().all(|d| d.norm() == 0.0) {
        a = full.solve_field(&x)?;
        let residual = full.residual(&a, &x);
        return Ok(SteadyState { a, x, residual, iterations: 0 });
    }

    let steps = opts.ramp_steps.max(1);
    for k in 1..=steps {
        // power doubles between stages; amplitude scales with its square root
        let scale = if k == steps { 1.0 } else { 2f64.powf(0.5 * (k as f64 - steps as f64)) };
        let model = Model::new(config, scale);
        let tol = if k == steps { opts.tol } else { opts.tol.max(1e-9) };
        solve_stage(&model, &mut a, &mut x, tol, opts.max_iter, &mut used)?;
    }
    let residual = full.residual(&a, &x);
    Ok(SteadyState { a, x, residual, iterations: used })
}

/// Maximum relative residual of the steady-state equations for a candidate
/// solution.
pub fn steady_residual(config: &ChainConfig, a: &[Complex64], x: &[f64]) -> f64 {
    Model::new(config, 1.0).residual(a, x)
}

/// Closed-form single-resonator steady state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleResonatorSteady {
    pub a: Complex64,
    pub x: f64,
    /// All admissible intracavity photon numbers, ascending. More than one
    /// entry means the resonator is bistable at this drive.
    pub admissible_photons: Vec<f64>,
}

/// Single-resonator steady state from the intensity cubic
/// `I (β² + (D₀ − K I)²) = κ_ex ε_l²`, with `D₀ = Δ_c − ξ r Ω²/ω_m²` and
/// `K = ħ ξ² / (m ω_m²)`. The lowest root is the branch reached by ramping the
/// pump up from zero.
pub fn solve_steady_single_oracle(spec: &ResonatorSpec, drive: &DriveSpec) -> Result<SingleResonatorSteady> {
    spec.validate()?;
    drive.validate()?;
    let beta = decay_rate(spec, drive, true);
    let x_spin = spec.centrifugal_displacement();
    let d0 = effective_detuning(spec, drive) - spec.xi * x_spin;
    let pull = spec.xi * spec.displacement_per_photon();
    let amp = drive.kappa_ex.sqrt() * drive.pump_amplitude();
    let flux = amp * amp;

    let roots = if flux == 0.0 {
        vec![0.0]
    } else if pull == 0.0 {
        vec![flux / (beta * beta + d0 * d0)]
    } else {
        intensity_roots(beta, d0, pull, flux)
    };
    let admissible: Vec<f64> = roots.into_iter().filter(|r| *r >= 0.0).collect();
    let photons = *admissible.first().ok_or_else(|| Error::invalid("intensity cubic has no admissible root"))?;
    let a = Complex64::new(amp, 0.0) / Complex64::new(beta, d0 - pull * photons);
    let x = x_spin + spec.displacement_per_photon() * photons;
    Ok(SingleResonatorSteady { a, x, admissible_photons: admissible })
}

/// Real roots of `I (β² + (d − k I)²) − f`, ascending.
fn intensity_roots(beta: f64, d: f64, k: f64, f: f64) -> Vec<f64> {
    // monic: I³ + b I² + c I + e
    let b = -2.0 * d / k;
    let c = (beta * beta + d * d) / (k * k);
    let e = -f / (k * k);
    let mut roots = real_cubic_roots(b, c, e);
    let g = |y: f64| y * (beta * beta + (d - k * y).powi(2)) - f;
    let dg = |y: f64| beta * beta + (d - k * y).powi(2) - 2.0 * k * y * (d - k * y);
    for r in &mut roots {
        for _ in 0..8 {
            let slope = dg(*r);
            if slope == 0.0 {
                break;
            }
            let next = *r - g(*r) / slope;
            if !next.is_finite() || next == *r {
                break;
            }
            *r = next;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * p.abs().max(q.abs()));
    roots
}

/// Real roots of the monic cubic `y³ + b y² + c y + e`.
fn real_cubic_roots(b: f64, c: f64, e: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + e;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift).collect()
    }
}
