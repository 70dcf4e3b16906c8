//! C ABI for `spinchain`.
//!
//! Objects are opaque handles created by the `spinchain_config_*` constructors
//! and `spinchain_spectrum_compute`, and released with the matching `_free`. Every fallible call returns a
//! [`SpinchainStatus`]; on failure a human-readable message is available from
//! [`spinchain_last_error`] on the same thread until the next failing call.
//! Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spinchain::analysis::{group_delay, nonreciprocity_contrast, transmission_at};
use spinchain::presets::{resonator_pair, single_resonator};
use spinchain::{parse_config, sweep_spectrum, to_config_string, ChainConfig, Error, SolverOptions, SpectrumResult};

/// Result of an API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinchainStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range, or text was not valid UTF-8.
    InvalidArgument = 2,
    /// Configuration text failed to parse or validate.
    Config = 3,
    /// Steady-state or response solve failed.
    Solver = 4,
    /// The library panicked; the handle involved should be discarded.
    Panic = 5,
}

/// A chain configuration.
pub struct SpinchainConfig {
    inner: ChainConfig,
}

/// A computed transmission spectrum.
pub struct SpinchainSpectrum {
    inner: SpectrumResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpinchainStatus {
    match e.root() {
        Error::Config(_) => SpinchainStatus::Config,
        Error::InvalidParameter(_) | Error::Grid(_) | Error::Io(_) => SpinchainStatus::InvalidArgument,
        _ => SpinchainStatus::Solver,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SpinchainStatus, String)>) -> SpinchainStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpinchainStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            SpinchainStatus::Panic
        }
    }
}

fn lib<T>(r: spinchain::Result<T>) -> Result<T, (SpinchainStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SpinchainStatus, String) {
    (SpinchainStatus::NullPointer, format!("{what} is null"))
}

unsafe fn config_ref<'a>(p: *const SpinchainConfig) -> Result<&'a ChainConfig, (SpinchainStatus, String)> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("config"))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SpinchainStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn spinchain_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spinchain_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse configuration text.
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_parse(
    text: *const c_char,
    out: *mut *mut SpinchainConfig,
) -> SpinchainStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| (SpinchainStatus::InvalidArgument, format!("config text is not UTF-8: {e}")))?;
        let inner = lib(parse_config(s))?;
        *out = Box::into_raw(Box::new(SpinchainConfig { inner }));
        Ok(())
    })
}

/// The bundled single-resonator chain.
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_single(out: *mut *mut SpinchainConfig) -> SpinchainStatus {
    guard(|| {
        *out_ptr(out, "out")? = Box::into_raw(Box::new(SpinchainConfig { inner: single_resonator() }));
        Ok(())
    })
}

/// The bundled two-resonator chain with coupling `j_over_kappa` times the
/// fiber coupling rate.
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_pair(j_over_kappa: f64, out: *mut *mut SpinchainConfig) -> SpinchainStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let inner = resonator_pair(j_over_kappa);
        lib(inner.validate())?;
        *out = Box::into_raw(Box::new(SpinchainConfig { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spinchain_config_free(config: *mut SpinchainConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Number of resonators in the chain.
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_len(config: *const SpinchainConfig, out: *mut usize) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        *out_ptr(out, "out")? = c.len();
        Ok(())
    })
}

/// Set the spin rate (Hz, signed) of resonator `index` (zero-based).
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_set_spin(
    config: *mut SpinchainConfig,
    index: usize,
    spin_rate: f64,
) -> SpinchainStatus {
    guard(|| {
        let c = &mut out_ptr(config, "config")?.inner;
        let n = c.len();
        let mut next = c.clone();
        let spec = next.resonators.get_mut(index).ok_or_else(|| {
            (SpinchainStatus::InvalidArgument, format!("index {index} out of range for {n} resonators"))
        })?;
        spec.spin_rate = spin_rate;
        lib(next.validate())?;
        *c = next;
        Ok(())
    })
}

/// Serialize the configuration to text. The returned string must be released
/// with [`spinchain_string_free`].
#[no_mangle]
pub unsafe extern "C" fn spinchain_config_to_string(
    config: *const SpinchainConfig,
    out: *mut *mut c_char,
) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        let out = out_ptr(out, "out")?;
        let s = CString::new(to_config_string(c)).map_err(|e| (SpinchainStatus::InvalidArgument, e.to_string()))?;
        *out = s.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spinchain_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Probe power transmission at detuning `delta_p` (Hz).
#[no_mangle]
pub unsafe extern "C" fn spinchain_transmission(
    config: *const SpinchainConfig,
    delta_p: f64,
    out: *mut f64,
) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        let out = out_ptr(out, "out")?;
        *out = lib(transmission_at(c, delta_p, &SolverOptions::default()))?;
        Ok(())
    })
}

/// Group delay (s) at detuning `delta_p` (Hz).
#[no_mangle]
pub unsafe extern "C" fn spinchain_group_delay(
    config: *const SpinchainConfig,
    delta_p: f64,
    out: *mut f64,
) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        let out = out_ptr(out, "out")?;
        *out = lib(group_delay(c, delta_p, &SolverOptions::default()))?;
        Ok(())
    })
}

/// Forward and backward transmission and their contrast
/// `(T_fwd − T_bwd)/(T_fwd + T_bwd)`. Any output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn spinchain_nonreciprocity(
    config: *const SpinchainConfig,
    delta_p: f64,
    forward: *mut f64,
    backward: *mut f64,
    contrast: *mut f64,
) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        let r = lib(nonreciprocity_contrast(c, delta_p, &SolverOptions::default()))?;
        for (p, v) in [(forward, r.forward), (backward, r.backward), (contrast, r.contrast)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Sweep `points` evenly spaced detunings from `dp_min` to `dp_max` (Hz).
#[no_mangle]
pub unsafe extern "C" fn spinchain_spectrum_compute(
    config: *const SpinchainConfig,
    dp_min: f64,
    dp_max: f64,
    points: usize,
    out: *mut *mut SpinchainSpectrum,
) -> SpinchainStatus {
    guard(|| {
        let c = config_ref(config)?;
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let grid = lib(spinchain::analysis::linspace(dp_min, dp_max, points))?;
        let inner = lib(sweep_spectrum(c, &grid, &SolverOptions::default()))?;
        *out = Box::into_raw(Box::new(SpinchainSpectrum { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn spinchain_spectrum_free(spectrum: *mut SpinchainSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Number of grid points in a spectrum.
#[no_mangle]
pub unsafe extern "C" fn spinchain_spectrum_len(
    spectrum: *const SpinchainSpectrum,
    out: *mut usize,
) -> SpinchainStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        *out_ptr(out, "out")? = s.inner.grid.len();
        Ok(())
    })
}

/// Copy the spectrum columns into caller buffers of length `len`, which must
/// equal the spectrum length. Any column pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn spinchain_spectrum_copy(
    spectrum: *const SpinchainSpectrum,
    len: usize,
    delta_p: *mut f64,
    transmission: *mut f64,
    phase: *mut f64,
    tau_g: *mut f64,
) -> SpinchainStatus {
    guard(|| {
        let s = &spectrum.as_ref().ok_or_else(|| null("spectrum"))?.inner;
        if len != s.grid.len() {
            return Err((
                SpinchainStatus::InvalidArgument,
                format!("buffer length {len} does not match spectrum length {}", s.grid.len()),
            ));
        }
        for (dst, src) in [(delta_p, &s.grid), (transmission, &s.transmission), (phase, &s.phase), (tau_g, &s.tau_g)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, len);
            }
        }
        Ok(())
    })
}
