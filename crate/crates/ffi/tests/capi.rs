use std::ffi::{CStr, CString};
use std::ptr;

use bergman_gaf_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gaf_last_error()) }.to_string_lossy().into_owned()
}

fn disk_basis(weight: GafWeightKind, c: f64, n: u32, degree: u32) -> *mut GafBasis {
    let mut b = ptr::null_mut();
    let s = unsafe { gaf_basis_new_disk(1.0, weight, c, n, degree, &mut b) };
    assert_eq!(s, GafStatus::Ok, "{}", last_error());
    b
}

#[test]
fn unweighted_kernel_matches_closed_form() {
    let b = disk_basis(GafWeightKind::Zero, 0.0, 1, 60);
    for r in [0.0, 0.3, 0.6] {
        let z = [r, 0.0];
        let (mut lk, mut un) = (0.0, 0.0);
        let s = unsafe { gaf_kernel_diag(b, z.as_ptr(), 2, &mut lk, &mut un) };
        assert_eq!(s, GafStatus::Ok);
        let exact = -(std::f64::consts::PI).ln() - 2.0 * (1.0 - r * r).ln();
        assert!((lk - exact).abs() < 1e-6, "r = {r}: {lk} vs {exact}");
        assert!((un - lk / 2.0).abs() < 1e-15);
    }
    unsafe { gaf_basis_free(b) };
}

#[test]
fn samples_are_reproducible_and_vanish_at_their_zeros() {
    let b = disk_basis(GafWeightKind::Quadratic, 1.0, 10, 40);
    let mut dim = 0;
    let mut residual = 1.0;
    assert_eq!(unsafe { gaf_basis_info(b, &mut dim, ptr::null_mut(), ptr::null_mut(), &mut residual) }, GafStatus::Ok);
    assert_eq!(dim, 41);
    assert!(residual < 1e-8);

    let coeffs = |trial: u64| -> Vec<f64> {
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { gaf_sample_new(b, 3, 8, trial, &mut s) }, GafStatus::Ok);
        let mut count = 0;
        assert_eq!(unsafe { gaf_sample_coefficients(s, ptr::null_mut(), 0, &mut count) }, GafStatus::BufferTooSmall);
        let mut out = vec![0.0; 2 * count];
        assert_eq!(unsafe { gaf_sample_coefficients(s, out.as_mut_ptr(), out.len(), &mut count) }, GafStatus::Ok);
        unsafe { gaf_sample_free(s) };
        out
    };
    assert_eq!(coeffs(0), coeffs(0));
    assert_ne!(coeffs(0), coeffs(1));

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gaf_sample_new(b, 3, 8, 0, &mut s) }, GafStatus::Ok);
    let mut zeros = vec![0.0; 200];
    let mut nz = 0;
    assert_eq!(unsafe { gaf_sample_zeros(s, 0.6, zeros.as_mut_ptr(), zeros.len(), &mut nz) }, GafStatus::Ok);
    assert!(nz > 0);
    for k in 0..nz {
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(unsafe { gaf_sample_eval(s, zeros[2 * k..].as_ptr(), 2, &mut re, &mut im) }, GafStatus::Ok);
        assert!(re.hypot(im) < 1e-6);
        assert!(zeros[2 * k].hypot(zeros[2 * k + 1]) <= 0.6);
    }
    unsafe {
        gaf_sample_free(s);
        gaf_basis_free(b);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut b = ptr::null_mut();
    let s = unsafe { gaf_basis_new_disk(-1.0, GafWeightKind::Zero, 0.0, 1, 10, &mut b) };
    assert_eq!(s, GafStatus::InvalidArgument);
    assert!(last_error().contains("radius"), "{}", last_error());
    assert!(b.is_null());

    let s = unsafe { gaf_basis_new_disk(1.0, GafWeightKind::Zero, 0.0, 1, 10, ptr::null_mut()) };
    assert_eq!(s, GafStatus::NullPointer);

    let cfg = CString::new("weight = \"zero\"\ntrails = 2\n").unwrap();
    let s = unsafe { gaf_basis_from_config(cfg.as_ptr(), 5, &mut b) };
    assert_eq!(s, GafStatus::Config);
    assert!(last_error().contains("valid keys"));

    let b = disk_basis(GafWeightKind::Zero, 0.0, 1, 10);
    let outside = [1.5, 0.0];
    let mut lk = 0.0;
    assert_eq!(unsafe { gaf_kernel_diag(b, outside.as_ptr(), 2, &mut lk, ptr::null_mut()) }, GafStatus::Ok);
    let s = unsafe { gaf_kernel_diag(b, outside.as_ptr(), 3, &mut lk, ptr::null_mut()) };
    assert_eq!(s, GafStatus::InvalidArgument);
    unsafe { gaf_basis_free(b) };
    unsafe { gaf_basis_free(ptr::null_mut()) };
}

#[test]
fn bidisc_basis_from_config() {
    let cfg = CString::new("domain = \"polydisc\"\nR1 = 1\nR2 = 1\nweight = \"quadratic\"\nbasis.degree = 8\n").unwrap();
    let mut b = ptr::null_mut();
    let s = unsafe { gaf_basis_from_config(cfg.as_ptr(), 2, &mut b) };
    assert_eq!(s, GafStatus::Ok, "{}", last_error());
    let (mut dim, mut ddim) = (0, 0);
    assert_eq!(unsafe { gaf_basis_info(b, &mut dim, ptr::null_mut(), &mut ddim, ptr::null_mut()) }, GafStatus::Ok);
    assert_eq!((dim, ddim), (45, 2));
    let z = [0.2, 0.0, 0.0, -0.1];
    let mut lk = f64::NAN;
    assert_eq!(unsafe { gaf_kernel_diag(b, z.as_ptr(), 4, &mut lk, ptr::null_mut()) }, GafStatus::Ok);
    assert!(lk.is_finite());
    unsafe { gaf_basis_free(b) };
}

#[test]
fn experiment_runs_through_the_c_abi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(format!(
        "experiment = \"l1\"\nweight = \"zero\"\ntrials = 20\ncache_dir = \"{}\"\n",
        dir.path().join("cache").display()
    ))
    .unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut code = -1;
    let s = unsafe { gaf_run_experiment(cfg.as_ptr(), out.as_ptr(), &mut code) };
    assert_eq!(s, GafStatus::Ok, "{}", last_error());
    assert!(code == 0 || code == 2);
    assert!(dir.path().join("out/report.json").exists());
}
