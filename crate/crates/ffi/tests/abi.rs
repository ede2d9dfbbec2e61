use std::ffi::{CStr, CString};
use std::ptr;

use simplex_qmc_ffi::*;

fn last_error() -> Option<String> {
    let p = sqmc_last_error_message();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { sqmc_string_free(p) };
    Some(s)
}

fn kernel(d: usize, r: f64, gamma: f64, max_degree: usize) -> *mut SqmcKernel {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { sqmc_kernel_new(d, r, gamma, max_degree, &mut k) }, SqmcStatus::Ok);
    assert!(!k.is_null());
    k
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(sqmc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn basis_handle_evaluates_all_functions() {
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { sqmc_basis_new(2, 3, &mut b) }, SqmcStatus::Ok);
    let len = unsafe { sqmc_basis_len(b) };
    assert_eq!(len, 10);
    let mut vals = vec![0.0; len];
    let x = [0.2, 0.3];
    assert_eq!(unsafe { sqmc_basis_eval(b, x.as_ptr(), 2, vals.as_mut_ptr(), len) }, SqmcStatus::Ok);
    assert_eq!(vals[0], 1.0);
    assert_eq!(unsafe { sqmc_basis_eval(b, x.as_ptr(), 2, vals.as_mut_ptr(), 3) }, SqmcStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("need 10"));
    unsafe { sqmc_basis_free(b) };
    unsafe { sqmc_basis_free(ptr::null_mut()) };
    assert_eq!(unsafe { sqmc_basis_len(ptr::null()) }, 0);
}

#[test]
fn kernel_values_agree_with_the_library() {
    let k = kernel(2, 4.0, 0.5, 6);
    let (x, y) = ([0.1, 0.2], [0.5, 0.25]);
    let (mut g, mut k1) = (0.0, 0.0);
    unsafe {
        assert_eq!(sqmc_kernel_g(k, x.as_ptr(), y.as_ptr(), 2, &mut g), SqmcStatus::Ok);
        assert_eq!(sqmc_kernel_k1(k, x.as_ptr(), y.as_ptr(), 2, &mut k1), SqmcStatus::Ok);
    }
    assert!((k1 - (1.0 + 0.5 * g)).abs() < 1e-15);

    let lib = simplex_qmc::Kernel::new(
        simplex_qmc::KernelParams::with_truncation(2, 4.0, 0.5, simplex_qmc::TruncationPolicy::at_degree(2, 4.0, 6).unwrap())
            .unwrap(),
    )
    .unwrap();
    let sx = simplex_qmc::SimplexPoint::new(x.to_vec()).unwrap();
    let sy = simplex_qmc::SimplexPoint::new(y.to_vec()).unwrap();
    assert_eq!(g, lib.g_eval(&sx, &sy).unwrap());

    let (mut l, mut tol) = (0usize, 0.0);
    assert_eq!(unsafe { sqmc_kernel_truncation(k, &mut l, &mut tol) }, SqmcStatus::Ok);
    assert_eq!(l, 6);
    assert!(tol > 0.0);

    // K_m over two factors is the product of the factor kernels
    let xm = [0.1, 0.2, 0.3, 0.3];
    let ym = [0.5, 0.25, 0.0, 0.9];
    let gammas = [0.5, 0.25];
    let mut km = 0.0;
    assert_eq!(unsafe { sqmc_kernel_km(k, xm.as_ptr(), ym.as_ptr(), 2, gammas.as_ptr(), &mut km) }, SqmcStatus::Ok);
    let mut g2 = 0.0;
    unsafe { sqmc_kernel_g(k, xm[2..].as_ptr(), ym[2..].as_ptr(), 2, &mut g2) };
    assert!((km - (1.0 + 0.5 * g) * (1.0 + 0.25 * g2)).abs() < 1e-14);
    unsafe { sqmc_kernel_free(k) };
}

#[test]
fn single_node_error_matches_the_diagonal() {
    let k = kernel(1, 3.0, 1.0, 8);
    let x = [0.3];
    let gammas = [0.7];
    let (mut e2, mut g) = (0.0, 0.0);
    unsafe {
        assert_eq!(sqmc_wce_sq(k, x.as_ptr(), 1, 1, gammas.as_ptr(), &mut e2), SqmcStatus::Ok);
        sqmc_kernel_g(k, x.as_ptr(), x.as_ptr(), 1, &mut g);
    }
    assert!((e2 - 0.7 * g).abs() < 1e-14);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    std::fs::write(&path, "x1_1\n0.3\n").unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut from_file = 0.0;
    assert_eq!(unsafe { sqmc_wce_sq_file(k, c_path.as_ptr(), 1, gammas.as_ptr(), &mut from_file) }, SqmcStatus::Ok);
    assert_eq!(from_file, e2);
    unsafe { sqmc_kernel_free(k) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { sqmc_kernel_new(2, 3.0, 0.5, 0, &mut k) }, SqmcStatus::Smoothness);
    assert!(k.is_null());
    assert!(last_error().unwrap().contains("smoothness"));

    assert_eq!(unsafe { sqmc_kernel_new(2, 4.0, 0.5, 4, ptr::null_mut()) }, SqmcStatus::NullPointer);
    let k = kernel(2, 4.0, 0.5, 4);
    let outside = [0.9, 0.9];
    let mut v = 0.0;
    assert_eq!(unsafe { sqmc_kernel_g(k, outside.as_ptr(), outside.as_ptr(), 2, &mut v) }, SqmcStatus::InvalidArgument);
    assert_eq!(unsafe { sqmc_kernel_g(ptr::null(), outside.as_ptr(), outside.as_ptr(), 2, &mut v) }, SqmcStatus::NullPointer);
    let inside = [0.1, 0.1];
    assert_eq!(unsafe { sqmc_kernel_g(k, inside.as_ptr(), inside.as_ptr(), 2, &mut v) }, SqmcStatus::Ok);
    assert_eq!(last_error(), None);
    let missing = CString::new("/nonexistent/points.csv").unwrap();
    let gammas = [0.5];
    assert_eq!(unsafe { sqmc_wce_sq_file(k, missing.as_ptr(), 1, gammas.as_ptr(), &mut v) }, SqmcStatus::Io);
    unsafe { sqmc_kernel_free(k) };
}

#[test]
fn series_constants_and_json_report() {
    let (mut c, mut s) = (0.0, 0.0);
    unsafe {
        assert_eq!(sqmc_c_dr(1, 3.0, &mut c), SqmcStatus::Ok);
        assert_eq!(sqmc_s_dr(1, 3.0, &mut s), SqmcStatus::Ok);
    }
    assert!((c - 1.289868).abs() < 1e-5);
    assert!((s - (10.0 - std::f64::consts::PI.powi(2))).abs() < 1e-10);

    let k = kernel(1, 3.0, 0.5, 6);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sqmc_kernel_constants_json(k, 0.5, 8, &mut json) }, SqmcStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { sqmc_string_free(json) };
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["constants"]["c_dr"].as_f64().unwrap(), c);
    unsafe { sqmc_kernel_free(k) };
}
