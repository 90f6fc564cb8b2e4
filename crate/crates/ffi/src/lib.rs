//! C ABI over the `hypbm` library.
//!
//! Models and path sets are opaque handles created and freed through this
//! interface. Every fallible call returns a [`HypbmStatus`]; on failure the
//! message is available from [`hypbm_last_error_message`] on the same thread
//! until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hypbm::acceptance::kernel_selfcheck;
use hypbm::config::Tolerances;
use hypbm::heat;
use hypbm::models::ModelSpec;
use hypbm::sampler::{simulate, PathSet, Scheme, SimSpec};
use hypbm::stats::{drift_estimate, Method};
use hypbm::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numeric = 4,
    Unsupported = 5,
    Panic = 6,
}

/// Simulation scheme.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypbmScheme {
    HalfPlaneExact = 0,
    PolarEm = 1,
    HyperboloidEm = 2,
}

/// Estimator for rates over a path set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypbmMethod {
    /// `r_T / T`.
    Endpoint = 0,
    /// `(r_T - r_{T/2}) / (T/2)`.
    Increment = 1,
}

/// Opaque model handle.
pub struct HypbmModel(ModelSpec);

/// Opaque handle to simulated paths.
pub struct HypbmPathSet(PathSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HypbmStatus {
    match e {
        Error::Parameter(_) | Error::Config(_) => HypbmStatus::InvalidArgument,
        Error::Domain(_) | Error::Range { .. } | Error::Singularity(_) | Error::InfiniteProduct => HypbmStatus::Domain,
        Error::Unsupported(_) => HypbmStatus::Unsupported,
        _ => HypbmStatus::Numeric,
    }
}

/// Run `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (HypbmStatus, String)>) -> HypbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HypbmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HypbmStatus::Panic
        }
    }
}

fn lib<T>(r: hypbm::Result<T>) -> Result<T, (HypbmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (HypbmStatus, String) {
    (HypbmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (HypbmStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), (HypbmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hypbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hypbm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Constant curvature `-a^2` in dimension `dim`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hypbm_model_new_constant(dim: usize, a: f64, out: *mut *mut HypbmModel) -> HypbmStatus {
    guard(|| {
        let m = lib(ModelSpec::constant(dim, a))?;
        write(out, Box::into_raw(Box::new(HypbmModel(m))), "out")
    })
}

/// # Safety
/// `model` must come from `hypbm_model_new_constant` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hypbm_model_free(model: *mut HypbmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Heat kernel `p(t, r)` of a constant-curvature model.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hypbm_heat_kernel(model: *const HypbmModel, t: f64, r: f64, out: *mut f64) -> HypbmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let sf = lib(m.0.space_form().ok_or_else(|| Error::Unsupported("heat kernel needs constant curvature".into())))?;
        write(out, lib(heat::heat_kernel(sf, t, r))?, "out")
    })
}

/// Green function `G(r)` of a constant-curvature model.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hypbm_green_function(model: *const HypbmModel, r: f64, out: *mut f64) -> HypbmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let sf = lib(m.0.space_form().ok_or_else(|| Error::Unsupported("Green function needs constant curvature".into())))?;
        write(out, lib(heat::green_function(sf, r))?, "out")
    })
}

/// Simulate `n_paths` paths from the base point up to `t_end`, keeping the
/// endpoints and the state at `t_end / 2`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hypbm_simulate(
    model: *const HypbmModel,
    scheme: HypbmScheme,
    t_end: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    out: *mut *mut HypbmPathSet,
) -> HypbmStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let scheme = match scheme {
            HypbmScheme::HalfPlaneExact => Scheme::HalfPlaneExact,
            HypbmScheme::PolarEm => Scheme::PolarEm,
            HypbmScheme::HyperboloidEm => Scheme::HyperboloidEm,
        };
        let spec = SimSpec::new(m.0.clone(), scheme, t_end, dt, n_paths, seed)
            .endpoints_only()
            .with_checkpoints(vec![t_end / 2.0]);
        let set = lib(simulate(&spec))?;
        write(out, Box::into_raw(Box::new(HypbmPathSet(set))), "out")
    })
}

/// Number of paths, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hypbm_pathset_len(set: *const HypbmPathSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.paths.len())
}

/// Distances from the base point at `t_end`, ordered by path id, into
/// `buf[0..len]`; `len` must equal the number of paths.
///
/// # Safety
/// `set` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hypbm_pathset_final_distances(set: *const HypbmPathSet, buf: *mut f64, len: usize) -> HypbmStatus {
    guard(|| {
        let s = deref(set, "set")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let d = lib(s.0.final_distances())?;
        if d.len() != len {
            return Err((HypbmStatus::InvalidArgument, format!("buffer holds {len} values, set has {} paths", d.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (slot, (_, r)) in out.iter_mut().zip(d) {
            *slot = r;
        }
        Ok(())
    })
}

/// Drift estimate and its standard error.
///
/// # Safety
/// `set` must be a live handle; `value` and `std_error` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hypbm_pathset_drift(
    set: *const HypbmPathSet,
    method: HypbmMethod,
    value: *mut f64,
    std_error: *mut f64,
) -> HypbmStatus {
    guard(|| {
        let s = deref(set, "set")?;
        let method = match method {
            HypbmMethod::Endpoint => Method::Endpoint,
            HypbmMethod::Increment => Method::Increment,
        };
        let est = lib(drift_estimate(&s.0, method))?;
        write(value, est.value, "value")?;
        write(std_error, est.std_error, "std_error")
    })
}

/// # Safety
/// `set` must come from `hypbm_simulate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hypbm_pathset_free(set: *mut HypbmPathSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Closed-form kernel checks at default tolerances; `*all_pass` is set to 1
/// when every check passes and 0 otherwise.
///
/// # Safety
/// `all_pass` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn hypbm_kernel_selfcheck(all_pass: *mut i32) -> HypbmStatus {
    guard(|| {
        let checks = lib(kernel_selfcheck(&Tolerances::default()))?;
        write(all_pass, i32::from(checks.iter().all(|c| c.pass)), "all_pass")
    })
}
