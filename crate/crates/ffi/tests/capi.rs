use std::ffi::{CStr, CString};
use std::ptr;

use meshless_stokes_ffi::*;

const CHANNEL: &str = r#"
nu = 1.0
order = 2

[refinement]
dx_inf = 0.125
levels = 1
layers = 1

[geometry.outer]
kind = "rectangle"
lower = [0.0, -0.5]
upper = [2.0, 0.5]

[flow]
kind = "poiseuille"
u_max = 1.0
"#;

fn last_error() -> String {
    let p = ms_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> (MsStatus, *mut MsConfig) {
    let c = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    let status = unsafe { ms_config_parse(c.as_ptr(), &mut cfg) };
    (status, cfg)
}

#[test]
fn poiseuille_solve_through_handles() {
    let (status, cfg) = parse(CHANNEL);
    assert_eq!(status, MsStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ms_solve(cfg, &mut sol) }, MsStatus::Ok);
    let n = unsafe { ms_solution_len(sol) };
    assert!(n > 50);
    assert_eq!(unsafe { ms_solution_colloid_count(sol) }, 0);
    let mut xy = vec![0.0; 2 * n];
    let mut uv = vec![0.0; 2 * n];
    let mut p = vec![0.0; n];
    let status = unsafe { ms_solution_copy_field(sol, xy.as_mut_ptr(), uv.as_mut_ptr(), p.as_mut_ptr(), n) };
    assert_eq!(status, MsStatus::Ok);
    let err = (0..n)
        .map(|i| {
            let y = xy[2 * i + 1];
            (uv[2 * i] - (1.0 - 4.0 * y * y)).abs() + uv[2 * i + 1].abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "max velocity error {err:e}");
    let (mut iters, mut res) = (0usize, 1.0);
    assert_eq!(unsafe { ms_solution_krylov(sol, &mut iters, &mut res) }, MsStatus::Ok);
    assert!(iters > 0 && res < 1e-9);
    unsafe {
        ms_solution_free(sol);
        ms_config_free(cfg);
    }
}

#[test]
fn preset_with_colloid_reports_motion_and_load() {
    let name = CString::new("quiescent").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ms_config_preset(name.as_ptr(), &mut cfg) }, MsStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ms_solve(cfg, &mut sol) }, MsStatus::Ok);
    assert_eq!(unsafe { ms_solution_colloid_count(sol) }, 1);
    let mut motion = [1.0; 3];
    let mut load = [1.0; 3];
    assert_eq!(unsafe { ms_solution_colloid(sol, 0, motion.as_mut_ptr(), load.as_mut_ptr()) }, MsStatus::Ok);
    assert!(motion.iter().chain(&load).all(|v| v.abs() < 1e-12));
    assert_eq!(unsafe { ms_solution_colloid(sol, 1, motion.as_mut_ptr(), ptr::null_mut()) }, MsStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    unsafe {
        ms_solution_free(sol);
        ms_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (status, cfg) = parse("nu = ");
    assert_eq!(status, MsStatus::Config);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());

    let name = CString::new("no-such-preset").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ms_config_preset(name.as_ptr(), &mut cfg) }, MsStatus::Config);
    assert_eq!(unsafe { ms_config_preset(ptr::null(), &mut cfg) }, MsStatus::NullPointer);
    assert_eq!(unsafe { ms_solve(ptr::null(), ptr::null_mut()) }, MsStatus::NullPointer);

    let (status, cfg) = parse(CHANNEL);
    assert_eq!(status, MsStatus::Ok);
    assert_eq!(unsafe { ms_config_set_order(cfg, 3) }, MsStatus::Config);
    assert_eq!(unsafe { ms_config_set_order(cfg, 4) }, MsStatus::Ok);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ms_solve(cfg, &mut sol) }, MsStatus::Ok);
    assert_eq!(unsafe { ms_solution_copy_field(sol, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 1) }, MsStatus::InvalidArgument);
    unsafe {
        ms_solution_free(sol);
        ms_config_free(cfg);
        ms_solution_free(ptr::null_mut());
        ms_config_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/meshless_stokes.h")).unwrap();
    for name in ["ms_config_parse", "ms_solve", "ms_solution_copy_field", "ms_last_error", "typedef struct MsSolution MsSolution"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let v = unsafe { CStr::from_ptr(ms_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
