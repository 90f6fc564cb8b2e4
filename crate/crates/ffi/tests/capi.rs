//! The C entry points driven from Rust, plus a header consistency check.

use std::ffi::CStr;
use std::ptr;

use hypbm_ffi::*;

fn last_error() -> String {
    let p = hypbm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model(dim: usize, a: f64) -> *mut HypbmModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hypbm_model_new_constant(dim, a, &mut m) }, HypbmStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(hypbm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn kernels_match_closed_forms() {
    let m = model(3, 1.0);
    let (t, r) = (0.7, 1.3);
    let mut p = 0.0;
    assert_eq!(unsafe { hypbm_heat_kernel(m, t, r, &mut p) }, HypbmStatus::Ok);
    let expected = (4.0 * std::f64::consts::PI * t).powf(-1.5) * (r / r.sinh()) * (-t - r * r / (4.0 * t)).exp();
    assert!((p - expected).abs() <= 1e-12 * expected);
    let mut g = 0.0;
    assert_eq!(unsafe { hypbm_green_function(m, r, &mut g) }, HypbmStatus::Ok);
    let expected = (-r).exp() / (4.0 * std::f64::consts::PI * r.sinh());
    assert!((g - expected).abs() <= 1e-10 * expected, "{g} vs {expected}");
    unsafe { hypbm_model_free(m) };
}

#[test]
fn invalid_arguments_report_status_and_message() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hypbm_model_new_constant(1, 1.0, &mut m) }, HypbmStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { hypbm_model_new_constant(3, 1.0, ptr::null_mut()) }, HypbmStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut v = 0.0;
    assert_eq!(unsafe { hypbm_heat_kernel(ptr::null(), 1.0, 1.0, &mut v) }, HypbmStatus::NullPointer);
    let m = model(2, 1.0);
    assert_eq!(unsafe { hypbm_heat_kernel(m, -1.0, 1.0, &mut v) }, HypbmStatus::Domain);
    let mut set = ptr::null_mut();
    assert_eq!(
        unsafe { hypbm_simulate(m, HypbmScheme::HalfPlaneExact, 1.0, 0.5, 10, 1, &mut set) },
        HypbmStatus::InvalidArgument
    );
    assert!(set.is_null());
    unsafe { hypbm_model_free(m) };
    unsafe { hypbm_model_free(ptr::null_mut()) };
    unsafe { hypbm_pathset_free(ptr::null_mut()) };
    assert_eq!(unsafe { hypbm_pathset_len(ptr::null()) }, 0);
}

#[test]
fn simulation_round_trip() {
    let m = model(3, 1.0);
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { hypbm_simulate(m, HypbmScheme::PolarEm, 20.0, 0.01, 400, 5, &mut set) }, HypbmStatus::Ok);
    let n = unsafe { hypbm_pathset_len(set) };
    assert_eq!(n, 400);
    let mut r = vec![0.0; n];
    assert_eq!(unsafe { hypbm_pathset_final_distances(set, r.as_mut_ptr(), n) }, HypbmStatus::Ok);
    assert!(r.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert_eq!(unsafe { hypbm_pathset_final_distances(set, r.as_mut_ptr(), n - 1) }, HypbmStatus::InvalidArgument);
    let (mut v, mut se) = (0.0, 0.0);
    assert_eq!(unsafe { hypbm_pathset_drift(set, HypbmMethod::Increment, &mut v, &mut se) }, HypbmStatus::Ok);
    // drift of H^3 at a = 1 is (d - 1) a = 2
    assert!((v - 2.0).abs() <= 4.0 * se + 0.02, "{v} +- {se}");

    let mut again = ptr::null_mut();
    assert_eq!(unsafe { hypbm_simulate(m, HypbmScheme::PolarEm, 20.0, 0.01, 400, 5, &mut again) }, HypbmStatus::Ok);
    let mut r2 = vec![0.0; n];
    assert_eq!(unsafe { hypbm_pathset_final_distances(again, r2.as_mut_ptr(), n) }, HypbmStatus::Ok);
    assert_eq!(r, r2);
    unsafe {
        hypbm_pathset_free(set);
        hypbm_pathset_free(again);
        hypbm_model_free(m);
    }
}

#[test]
fn selfcheck_passes() {
    let mut pass = -1;
    assert_eq!(unsafe { hypbm_kernel_selfcheck(&mut pass) }, HypbmStatus::Ok);
    assert_eq!(pass, 1);
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/hypbm.h");
    for f in [
        "hypbm_version", "hypbm_last_error_message", "hypbm_model_new_constant", "hypbm_model_free", "hypbm_heat_kernel",
        "hypbm_green_function", "hypbm_simulate", "hypbm_pathset_len", "hypbm_pathset_final_distances",
        "hypbm_pathset_drift", "hypbm_pathset_free", "hypbm_kernel_selfcheck",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f}");
    }
    assert!(header.contains("typedef struct HypbmModel HypbmModel;"));
    assert!(header.contains("HYPBM_STATUS_OK = 0"));
}
