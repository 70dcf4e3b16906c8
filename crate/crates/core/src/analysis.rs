//! Detuning and spin-rate sweeps and the metrics derived from them.
//!
//! Every observable is read on the probe-detuning axis Δ_p = η − ω_m,1, so
//! the OMIT window of a chain at rest sits at Δ_p = 0. Group delays are
//! `τ_g = d arg(t_p) / dΔ_p` in seconds: positive is slow light, negative fast
//! light.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::{ChainConfig, ResonatorSpec, HBAR};
use crate::response::{eta_from_delta_p, solve_response, ResponseOptions, ResponsePoint};
use crate::steady::{solve_steady, SteadyOptions, SteadyState};
use crate::{Error, Result};

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "SPINCHAIN_THREADS";

/// Baselines below these are treated as zero when normalizing.
pub const MIN_BASELINE_TRANSMISSION: f64 = 1e-15;
pub const MIN_BASELINE_GROUP_DELAY: f64 = 1e-18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelayOptions {
    /// Initial half-width of the central difference, Hz.
    pub step: f64,
    /// Relative change between successive halvings accepted as converged.
    pub rel_tol: f64,
    pub max_halvings: u32,
}

impl Default for GroupDelayOptions {
    fn default() -> Self {
        GroupDelayOptions { step: 1e3, rel_tol: 1e-3, max_halvings: 6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SolverOptions {
    pub steady: SteadyOptions,
    pub response: ResponseOptions,
    pub group_delay: GroupDelayOptions,
}

/// Provenance carried with every spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub config: ChainConfig,
    pub options: SolverOptions,
    pub steady_residual: f64,
    pub steady_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Probe detunings Δ_p, Hz, in the order they were requested.
    pub grid: Vec<f64>,
    pub transmission: Vec<f64>,
    /// Unwrapped arg t_p, rad.
    pub phase: Vec<f64>,
    /// Group delay, s.
    pub tau_g: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !min.is_finite() || !max.is_finite() || !(max > min) {
        return Err(Error::Grid(format!(
            "need at least 2 points and a finite range with max > min (got {points} points on [{min}, {max}])"
        )));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { max } else { min + step * k as f64 }).collect())
}

/// Run `f` on a pool capped by `SPINCHAIN_THREADS` when that is set to a
/// positive integer, otherwise on the global pool.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn check_grid(grid: &[f64]) -> Result<bool> {
    if grid.len() < 3 {
        return Err(Error::Grid(format!("need at least 3 points, got {}", grid.len())));
    }
    if let Some(k) = grid.iter().position(|v| !v.is_finite()) {
        return Err(Error::Grid(format!("point {k} is not finite")));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::Grid("grid must be strictly monotonic".into()));
    }
    Ok(increasing)
}

/// Probe response on an ascending grid, in grid order.
fn responses(
    ss: &SteadyState,
    config: &ChainConfig,
    grid: &[f64],
    opts: &ResponseOptions,
) -> Result<Vec<ResponsePoint>> {
    let n = grid.len();
    let results: Vec<Result<ResponsePoint>> = with_thread_cap(|| {
        (0..n)
            .into_par_iter()
            .map(|k| {
                let eta = eta_from_delta_p(config, grid[k]);
                match solve_response(ss, config, eta, opts) {
                    Err(Error::SingularSystem { .. }) => {
                        // nudge off an isolated singular point by a tiny
                        // fraction of the local spacing
                        let spacing = match k {
                            0 => grid[1] - grid[0],
                            _ if k + 1 == n => grid[k] - grid[k - 1],
                            _ => (grid[k] - grid[k - 1]).min(grid[k + 1] - grid[k]),
                        };
                        solve_response(ss, config, eta + 1e-9 * spacing, opts)
                    }
                    other => other,
                }
                .map_err(|e| Error::AtGridPoint { index: k, source: Box::new(e) })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Probe transmission spectrum over a detuning grid.
///
/// The grid must be strictly monotonic with at least three points. A
/// decreasing grid yields the same values in reverse order.
pub fn sweep_spectrum(config: &ChainConfig, grid: &[f64], opts: &SolverOptions) -> Result<SpectrumResult> {
    let increasing = check_grid(grid)?;
    let ss = solve_steady(config, &opts.steady)?;
    let ascending: Vec<f64> = if increasing { grid.to_vec() } else { grid.iter().rev().copied().collect() };
    let points = responses(&ss, config, &ascending, &opts.response)?;
    let t: Vec<Complex64> = points.iter().map(|p| p.t_p).collect();
    let mut transmission: Vec<f64> = points.iter().map(|p| p.transmission).collect();
    let eval = |dp: f64| -> Result<Complex64> {
        Ok(solve_response(&ss, config, eta_from_delta_p(config, dp), &opts.response)?.t_p)
    };
    let mut phase = unwrap_phase_refined(&ascending, &t, eval)?;
    let mut tau_g = derivative(&ascending, &phase);
    let mut out_grid = ascending;
    if !increasing {
        for v in [&mut out_grid, &mut transmission, &mut phase, &mut tau_g] {
            v.reverse();
        }
    }
    Ok(SpectrumResult {
        grid: out_grid,
        transmission,
        phase,
        tau_g,
        metadata: SpectrumMetadata {
            config: config.clone(),
            options: *opts,
            steady_residual: ss.residual,
            steady_iterations: ss.iterations,
        },
    })
}

/// Largest phase step between neighbouring points accepted by
/// [`unwrap_phase`]; anything larger means the grid is too coarse to follow
/// the phase.
pub const MAX_PHASE_STEP: f64 = FRAC_PI_2;

/// Continuous arg t along a sequence of samples, starting from the principal
/// value of the first one.
pub fn unwrap_phase(t: &[Complex64]) -> Result<Vec<f64>> {
    let Some(first) = t.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::with_capacity(t.len());
    out.push(first.arg());
    for k in 1..t.len() {
        let step = (t[k] / t[k - 1]).arg();
        if !step.is_finite() || step.abs() > MAX_PHASE_STEP {
            return Err(Error::PhaseUnresolved { index: k - 1, step });
        }
        out.push(out[k - 1] + step);
    }
    Ok(out)
}

/// Bisection depth used by [`unwrap_phase_refined`] before giving up.
pub const MAX_REFINE_DEPTH: u32 = 40;

/// Like [`unwrap_phase`], but an interval whose phase step is too large is
/// bisected with extra evaluations of `t` until every sub-step is resolved.
/// Near a transmission zero the phase turns by almost π over a tiny detuning
/// range, which no practical grid spacing can follow on its own.
pub fn unwrap_phase_refined(
    grid: &[f64],
    t: &[Complex64],
    eval: impl Fn(f64) -> Result<Complex64>,
) -> Result<Vec<f64>> {
    let Some(first) = t.first() else {
        return Ok(Vec::new());
    };
    fn track(
        eval: &dyn Fn(f64) -> Result<Complex64>,
        (x0, t0): (f64, Complex64),
        (x1, t1): (f64, Complex64),
        depth: u32,
    ) -> Option<Result<f64>> {
        let step = (t1 / t0).arg();
        if step.is_finite() && step.abs() <= MAX_PHASE_STEP {
            return Some(Ok(step));
        }
        let xm = 0.5 * (x0 + x1);
        if depth == 0 || xm == x0 || xm == x1 {
            return None;
        }
        let tm = match eval(xm) {
            Ok(v) => v,
            Err(e) => return Some(Err(e)),
        };
        let left = track(eval, (x0, t0), (xm, tm), depth - 1)?;
        let right = track(eval, (xm, tm), (x1, t1), depth - 1)?;
        Some(left.and_then(|l| right.map(|r| l + r)))
    }
    let mut out = Vec::with_capacity(t.len());
    out.push(first.arg());
    for k in 1..t.len() {
        let step = match track(&eval, (grid[k - 1], t[k - 1]), (grid[k], t[k]), MAX_REFINE_DEPTH) {
            Some(step) => step?,
            None => return Err(Error::PhaseUnresolved { index: k - 1, step: (t[k] / t[k - 1]).arg() }),
        };
        out.push(out[k - 1] + step);
    }
    Ok(out)
}

/// Phase-unwrapping of raw angles: each jump is folded into (−π, π].
pub fn unwrap_angles(wrapped: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(wrapped.len());
    for (k, &w) in wrapped.iter().enumerate() {
        if k == 0 {
            out.push(w);
            continue;
        }
        let mut d = (w - wrapped[k - 1]).rem_euclid(2.0 * PI);
        if d > PI {
            d -= 2.0 * PI;
        }
        out.push(out[k - 1] + d);
    }
    out
}

/// Second-order finite-difference derivative on a non-uniform ascending grid,
/// one-sided at the ends.
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n >= 3 && y.len() == n);
    let three_point = |i0: usize, i1: usize, i2: usize, at: usize| {
        // derivative at x[at] of the parabola through three points
        let (x0, x1, x2) = (x[i0], x[i1], x[i2]);
        let xa = x[at];
        y[i0] * (2.0 * xa - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y[i1] * (2.0 * xa - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y[i2] * (2.0 * xa - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| match i {
            0 => three_point(0, 1, 2, 0),
            _ if i + 1 == n => three_point(n - 3, n - 2, n - 1, n - 1),
            _ => three_point(i - 1, i, i + 1, i),
        })
        .collect()
}

/// Probe transmission rate at one detuning.
pub fn transmission_at(config: &ChainConfig, delta_p: f64, opts: &SolverOptions) -> Result<f64> {
    let ss = solve_steady(config, &opts.steady)?;
    let eta = eta_from_delta_p(config, delta_p);
    Ok(solve_response(&ss, config, eta, &opts.response)?.transmission)
}

/// Group-delay estimate with the step it converged at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelay {
    pub tau_g: f64,
    pub step: f64,
    pub converged: bool,
}

/// Central-difference group delay around a solved steady state, halving the
/// step until successive estimates agree.
pub fn group_delay_with(
    ss: &SteadyState,
    config: &ChainConfig,
    delta_p: f64,
    opts: &SolverOptions,
) -> Result<GroupDelay> {
    let gd = &opts.group_delay;
    if !(gd.step > 0.0) || !gd.step.is_finite() {
        return Err(Error::invalid("group-delay step must be finite and > 0"));
    }
    let eta = eta_from_delta_p(config, delta_p);
    let estimate = |h: f64| -> Result<f64> {
        let up = solve_response(ss, config, eta + h, &opts.response)?.t_p;
        let down = solve_response(ss, config, eta - h, &opts.response)?.t_p;
        Ok((up / down).arg() / (2.0 * h))
    };
    let mut h = gd.step;
    let mut prev = estimate(h)?;
    for _ in 0..gd.max_halvings {
        h *= 0.5;
        let next = estimate(h)?;
        if (next - prev).abs() <= gd.rel_tol * next.abs() + MIN_BASELINE_GROUP_DELAY * gd.rel_tol {
            return Ok(GroupDelay { tau_g: next, step: h, converged: true });
        }
        prev = next;
    }
    Ok(GroupDelay { tau_g: prev, step: h, converged: false })
}

/// Group delay τ_g at one detuning, s.
pub fn group_delay(config: &ChainConfig, delta_p: f64, opts: &SolverOptions) -> Result<f64> {
    let ss = solve_steady(config, &opts.steady)?;
    Ok(group_delay_with(&ss, config, delta_p, opts)?.tau_g)
}

fn check_pair(spinning: &ChainConfig, rest: &ChainConfig) -> Result<()> {
    if spinning.same_except_spin(rest) {
        Ok(())
    } else {
        Err(Error::invalid("spinning and reference chains may differ only in spin rates"))
    }
}

fn ratio_minus_one(value: f64, baseline: f64, min: f64, quantity: &'static str) -> Result<f64> {
    if baseline.abs() < min {
        return Err(Error::ZeroBaseline { quantity, value: baseline });
    }
    Ok(value / baseline - 1.0)
}

/// Transmission enhancement `T(spinning)/T(rest) − 1` at one detuning.
pub fn enhancement_factor(
    spinning: &ChainConfig,
    rest: &ChainConfig,
    delta_p: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    check_pair(spinning, rest)?;
    let base = transmission_at(rest, delta_p, opts)?;
    let value = transmission_at(spinning, delta_p, opts)?;
    ratio_minus_one(value, base, MIN_BASELINE_TRANSMISSION, "transmission")
}

/// Group-delay enhancement `τ_g(spinning)/τ_g(rest) − 1` at one detuning.
pub fn gd_enhancement(spinning: &ChainConfig, rest: &ChainConfig, delta_p: f64, opts: &SolverOptions) -> Result<f64> {
    check_pair(spinning, rest)?;
    let base = group_delay(rest, delta_p, opts)?;
    let value = group_delay(spinning, delta_p, opts)?;
    ratio_minus_one(value, base, MIN_BASELINE_GROUP_DELAY, "group delay")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonreciprocity {
    pub forward: f64,
    pub backward: f64,
    /// `(T_fwd − T_bwd)/(T_fwd + T_bwd)`, zero when both vanish.
    pub contrast: f64,
}

/// Transmission for the configured launch direction against the reversed one.
pub fn nonreciprocity_contrast(config: &ChainConfig, delta_p: f64, opts: &SolverOptions) -> Result<Nonreciprocity> {
    let forward = transmission_at(config, delta_p, opts)?;
    let backward = transmission_at(&config.reversed(), delta_p, opts)?;
    let sum = forward + backward;
    let contrast = if sum == 0.0 { 0.0 } else { (forward - backward) / sum };
    Ok(Nonreciprocity { forward, backward, contrast })
}

/// Quantity reported by a spin-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// Transmission enhancement factor.
    Ef,
    /// Group-delay enhancement.
    Gd,
    /// Group delay, s.
    Tau,
}

impl MetricMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricMode::Ef => "ef",
            MetricMode::Gd => "gd",
            MetricMode::Tau => "tau",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub omega_abs: f64,
    pub ef: f64,
    pub gd: f64,
    pub tau_g: f64,
}

struct Observed {
    transmission: f64,
    tau_g: f64,
}

fn observe(config: &ChainConfig, delta_p: f64, opts: &SolverOptions, need_tau: bool) -> Result<Observed> {
    let ss = solve_steady(config, &opts.steady)?;
    let eta = eta_from_delta_p(config, delta_p);
    let transmission = solve_response(&ss, config, eta, &opts.response)?.transmission;
    let tau_g = if need_tau { group_delay_with(&ss, config, delta_p, opts)?.tau_g } else { f64::NAN };
    Ok(Observed { transmission, tau_g })
}

fn check_spin_grid(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(Error::Grid("spin-rate grid is empty".into()));
    }
    if let Some(k) = omegas.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Grid(format!("spin rate {k} must be finite and >= 0")));
    }
    Ok(())
}

fn observe_over_spin(
    config: &ChainConfig,
    delta_p: f64,
    omegas: &[f64],
    opts: &SolverOptions,
    need_tau: bool,
) -> Result<Vec<Observed>> {
    let results: Vec<Result<Observed>> = with_thread_cap(|| {
        omegas
            .par_iter()
            .enumerate()
            .map(|(k, &w)| {
                observe(&config.with_spin_magnitude(w), delta_p, opts, need_tau)
                    .map_err(|e| Error::AtGridPoint { index: k, source: Box::new(e) })
            })
            .collect()
    });
    results.into_iter().collect()
}

/// E.F., G.D. and τ_g against spin-rate magnitude. The signs of the spin rates
/// in `config` fix the direction pattern; resonators at rest stay at rest.
pub fn spin_sweep(
    config: &ChainConfig,
    delta_p: f64,
    omegas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<MetricPoint>> {
    check_spin_grid(omegas)?;
    let rest = observe(&config.at_rest(), delta_p, opts, true)?;
    let spun = observe_over_spin(config, delta_p, omegas, opts, true)?;
    spun.iter()
        .zip(omegas)
        .map(|(o, &w)| {
            Ok(MetricPoint {
                omega_abs: w,
                ef: ratio_minus_one(o.transmission, rest.transmission, MIN_BASELINE_TRANSMISSION, "transmission")?,
                gd: ratio_minus_one(o.tau_g, rest.tau_g, MIN_BASELINE_GROUP_DELAY, "group delay")?,
                tau_g: o.tau_g,
            })
        })
        .collect()
}

/// One metric against spin-rate magnitude; see [`spin_sweep`].
pub fn metric_curve(
    config: &ChainConfig,
    delta_p: f64,
    omegas: &[f64],
    mode: MetricMode,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    check_spin_grid(omegas)?;
    let need_tau = mode != MetricMode::Ef;
    let spun = observe_over_spin(config, delta_p, omegas, opts, need_tau)?;
    match mode {
        MetricMode::Tau => Ok(spun.iter().map(|o| o.tau_g).collect()),
        MetricMode::Ef => {
            let rest = observe(&config.at_rest(), delta_p, opts, false)?;
            spun.iter()
                .map(|o| ratio_minus_one(o.transmission, rest.transmission, MIN_BASELINE_TRANSMISSION, "transmission"))
                .collect()
        }
        MetricMode::Gd => {
            let rest = observe(&config.at_rest(), delta_p, opts, true)?;
            spun.iter().map(|o| ratio_minus_one(o.tau_g, rest.tau_g, MIN_BASELINE_GROUP_DELAY, "group delay")).collect()
        }
    }
}

/// Indices of strict interior local minima.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] < values[i - 1] && values[i] < values[i + 1]).collect()
}

/// Full width at half maximum of the transmission peak closest to Δ_p = 0,
/// with linear interpolation of the half-maximum crossings.
pub fn transparency_window_width(grid: &[f64], transmission: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    if transmission.len() != grid.len() {
        return Err(Error::Grid("grid and transmission lengths differ".into()));
    }
    let maxima: Vec<usize> = (1..grid.len() - 1)
        .filter(|&i| transmission[i] > transmission[i - 1] && transmission[i] >= transmission[i + 1])
        .collect();
    let peak = maxima
        .into_iter()
        .min_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()))
        .ok_or_else(|| Error::Grid("no transmission peak inside the grid".into()))?;
    let half = 0.5 * transmission[peak];
    let cross = |from: usize, to: usize| -> f64 {
        let (t0, t1) = (transmission[from], transmission[to]);
        grid[from] + (half - t0) / (t1 - t0) * (grid[to] - grid[from])
    };
    let left = (0..peak).rev().find(|&i| transmission[i] < half).map(|i| cross(i, i + 1));
    let right = (peak + 1..grid.len()).find(|&i| transmission[i] < half).map(|i| cross(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Ok((r - l).abs()),
        _ => Err(Error::Grid("transmission peak does not fall to half maximum inside the grid".into())),
    }
}

/// Analytic OMIT window width `γ_m + ħ ξ² |a|² / (m ω_m β)` of the fiber-coupled
/// resonator, Hz.
pub fn omit_linewidth_estimate(spec: &ResonatorSpec, beta: f64, ss: &SteadyState) -> f64 {
    spec.gamma_m + HBAR * spec.xi * spec.xi * ss.a[0].norm_sqr() / (spec.mass * spec.omega_m * beta)
}
