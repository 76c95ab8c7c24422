//! C ABI for the meshless Stokes solver.
//!
//! Configurations and solutions are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`MsStatus`]; on failure a message is kept per thread and can be read
//! with [`ms_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use meshless_stokes::config::SimConfig;
use meshless_stokes::scenarios::solve_once;
use meshless_stokes::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Geometry = 4,
    Resolution = 5,
    Stencil = 6,
    Solver = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque simulation configuration.
pub struct MsConfig {
    inner: SimConfig,
}

/// Opaque result of one steady solve.
pub struct MsSolution {
    positions: Vec<[f64; 2]>,
    velocity: Vec<[f64; 2]>,
    pressure: Vec<f64>,
    /// Per colloid: vx, vy, angular velocity.
    motion: Vec<[f64; 3]>,
    /// Per colloid: fx, fy, torque exerted by the fluid.
    load: Vec<[f64; 3]>,
    iterations: usize,
    residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (MsStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn classify(e: Error) -> Failure {
    let status = match &e {
        Error::Config(_) | Error::Usage(_) => MsStatus::Config,
        Error::Geometry(_) => MsStatus::Geometry,
        Error::Resolution(_) | Error::Unisolvency { .. } => MsStatus::Resolution,
        Error::SingularStencil { .. } | Error::Assembly(_) => MsStatus::Stencil,
        Error::PreconditionerSetup(_) | Error::NotConverged { .. } => MsStatus::Solver,
        Error::Io { .. } => MsStatus::Io,
    };
    (status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (MsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (MsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn emit_config(out: *mut *mut MsConfig, inner: SimConfig) -> Result<(), Failure> {
    inner.validate().map_err(classify)?;
    *out = Box::into_raw(Box::new(MsConfig { inner }));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a built-in configuration by name (e.g. "channel", "quiescent").
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_config_preset(name: *const c_char, out: *mut *mut MsConfig) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(name, "name")?;
        emit_config(out, SimConfig::preset(name).map_err(classify)?)
    })
}

/// Parses a configuration from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_config_parse(toml: *const c_char, out: *mut *mut MsConfig) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(toml, "toml")?;
        emit_config(out, SimConfig::parse(text).map_err(classify)?)
    })
}

/// Sets the reconstruction order (2 or 4).
///
/// # Safety
/// `cfg` must be a live handle from `ms_config_preset` or `ms_config_parse`.
#[no_mangle]
pub unsafe extern "C" fn ms_config_set_order(cfg: *mut MsConfig, order: usize) -> MsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.inner.clone();
        next.order = order;
        next.validate().map_err(classify)?;
        cfg.inner = next;
        Ok(())
    })
}

/// Releases a configuration. NULL is ignored.
///
/// # Safety
/// `cfg` must be NULL or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ms_config_free(cfg: *mut MsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Builds the point cloud and solves the steady problem of `cfg`.
///
/// # Safety
/// `cfg` must be a live configuration handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_solve(cfg: *const MsConfig, out: *mut *mut MsSolution) -> MsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.inner;
        let run = solve_once(cfg).map_err(classify)?;
        let load = run.forces(&cfg.geometry.colloids).map_err(classify)?;
        let sol = &run.solve.solution;
        let motion = sol
            .colloid_velocity
            .iter()
            .zip(&sol.colloid_angular_velocity)
            .map(|(v, w)| [v[0], v[1], *w])
            .collect();
        *out = Box::into_raw(Box::new(MsSolution {
            positions: run.cloud.positions.clone(),
            velocity: sol.velocity.clone(),
            pressure: sol.pressure.clone(),
            motion,
            load: load.into_iter().map(|(f, t)| [f[0], f[1], t]).collect(),
            iterations: run.solve.report.iterations,
            residual: run.solve.report.relative_residual,
        }));
        Ok(())
    })
}

/// Number of points in the solution cloud, 0 for NULL.
///
/// # Safety
/// `sol` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_len(sol: *const MsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.positions.len())
}

/// Number of colloids in the solution, 0 for NULL.
///
/// # Safety
/// `sol` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_colloid_count(sol: *const MsSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.motion.len())
}

/// Copies the field into caller buffers. `xy` and `uv` hold `2*len`
/// interleaved values, `p` holds `len`; any of them may be NULL to skip it.
/// `len` must equal `ms_solution_len`.
///
/// # Safety
/// Non-NULL buffers must be writable for the sizes above.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_copy_field(
    sol: *const MsSolution,
    xy: *mut f64,
    uv: *mut f64,
    p: *mut f64,
    len: usize,
) -> MsStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        if len != s.positions.len() {
            return Err((
                MsStatus::InvalidArgument,
                format!("len {len} does not match {} points", s.positions.len()),
            ));
        }
        if !xy.is_null() {
            std::ptr::copy_nonoverlapping(s.positions.as_ptr().cast::<f64>(), xy, 2 * len);
        }
        if !uv.is_null() {
            std::ptr::copy_nonoverlapping(s.velocity.as_ptr().cast::<f64>(), uv, 2 * len);
        }
        if !p.is_null() {
            std::ptr::copy_nonoverlapping(s.pressure.as_ptr(), p, len);
        }
        Ok(())
    })
}

/// Rigid motion (vx, vy, angular velocity) and fluid load (fx, fy, torque)
/// of colloid `index`. Either output may be NULL.
///
/// # Safety
/// Non-NULL `motion` and `load` must be writable for 3 doubles each.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_colloid(
    sol: *const MsSolution,
    index: usize,
    motion: *mut f64,
    load: *mut f64,
) -> MsStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        if index >= s.motion.len() {
            return Err((
                MsStatus::InvalidArgument,
                format!("colloid index {index} out of range for {} colloids", s.motion.len()),
            ));
        }
        if !motion.is_null() {
            std::ptr::copy_nonoverlapping(s.motion[index].as_ptr(), motion, 3);
        }
        if !load.is_null() {
            std::ptr::copy_nonoverlapping(s.load[index].as_ptr(), load, 3);
        }
        Ok(())
    })
}

/// Krylov iteration count and final relative residual of the solve.
///
/// # Safety
/// Non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_krylov(
    sol: *const MsSolution,
    iterations: *mut usize,
    residual: *mut f64,
) -> MsStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        if let Some(it) = iterations.as_mut() {
            *it = s.iterations;
        }
        if let Some(r) = residual.as_mut() {
            *r = s.residual;
        }
        Ok(())
    })
}

/// Releases a solution. NULL is ignored.
///
/// # Safety
/// `sol` must be NULL or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ms_solution_free(sol: *mut MsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(classify(Error::Unisolvency { have: 3, need: 6 }).0, MsStatus::Resolution);
        assert_eq!(classify(Error::NotConverged { iterations: 9, residual: 1.0 }).0, MsStatus::Solver);
        assert_eq!(guard(|| panic!("boom")), MsStatus::Panic);
        assert_eq!(guard(|| Ok(())), MsStatus::Ok);
    }
}
