//! C ABI over `snls_core`.
//!
//! Objects cross the boundary as opaque handles created by `snls_*_new` /
//! `snls_*_from_json` and released with the matching `_free`. Every fallible
//! call returns an [`SnlsStatus`]; the message for the last failure on the
//! calling thread is available from [`snls_last_error`]. Panics are caught
//! and reported as `SNLS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use num_complex::Complex64;
use snls_core::grid::{Field, SpatialGrid};
use snls_core::pathsim::{run_path, PathConfig, PathRecord};
use snls_core::SnlsError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Io = 5,
    Panic = 6,
}

/// Path configuration (JSON schema of `PathConfig`).
pub struct SnlsConfig {
    inner: PathConfig,
}

/// Result of one path.
pub struct SnlsRecord {
    inner: PathRecord,
}

/// Periodic spatial grid.
pub struct SnlsGrid {
    inner: Arc<SpatialGrid>,
}

/// Scalar outcome of a path. Stopping times that were never reached are `+inf`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnlsPathSummary {
    pub completed: bool,
    pub steps_completed: u64,
    pub sup_l2: f64,
    pub x2_fifth: f64,
    pub x_norm: f64,
    pub mass_drift: f64,
    pub boundary_mass: f64,
    pub stopping_time_m: f64,
    pub stopping_time_m_eps: f64,
    pub saturation_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

type Failure = (SnlsStatus, String);

fn from_core(e: SnlsError) -> Failure {
    let status = match &e {
        SnlsError::Config(_) | SnlsError::Json(_) => SnlsStatus::Config,
        SnlsError::InvalidParameter(_) => SnlsStatus::InvalidArgument,
        SnlsError::Io { .. } => SnlsStatus::Io,
        _ => SnlsStatus::Runtime,
    };
    (status, e.to_string())
}

fn null(what: &str) -> Failure {
    (SnlsStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: String) -> Failure {
    (SnlsStatus::InvalidArgument, msg)
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SnlsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("panic: {msg}"));
            SnlsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| (SnlsStatus::Runtime, "string contains NUL".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `snls_*` call on the same thread.
#[no_mangle]
pub extern "C" fn snls_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn snls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from an `snls_*` function that returns an owned string, or be NULL.
#[no_mangle]
pub unsafe extern "C" fn snls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn snls_config_default(out: *mut *mut SnlsConfig) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SnlsConfig {
            inner: PathConfig::default(),
        }));
        Ok(())
    })
}

/// Parses and validates a JSON path configuration; missing fields take defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_config_from_json(json: *const c_char, out: *mut *mut SnlsConfig) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let inner: PathConfig = serde_json::from_str(text).map_err(|e| (SnlsStatus::Config, e.to_string()))?;
        inner.validate().map_err(from_core)?;
        *out = Box::into_raw(Box::new(SnlsConfig { inner }));
        Ok(())
    })
}

/// Resolved configuration as JSON; free with [`snls_string_free`].
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_config_to_json(cfg: *const SnlsConfig, out: *mut *mut c_char) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = ref_arg(cfg, "cfg")?;
        let s = serde_json::to_string(&cfg.inner).map_err(|e| (SnlsStatus::Runtime, e.to_string()))?;
        *out = into_c_string(s)?;
        Ok(())
    })
}

/// Overrides the seed of a configuration.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn snls_config_set_seed(cfg: *mut SnlsConfig, seed: u64) -> SnlsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        cfg.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a handle from this library or NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snls_config_free(cfg: *mut SnlsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs one path. Aborted paths (NaN/Inf) still produce a record; check
/// `completed` in the summary.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_run_path(cfg: *const SnlsConfig, out: *mut *mut SnlsRecord) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = ref_arg(cfg, "cfg")?;
        let inner = run_path(&cfg.inner).map_err(from_core)?;
        *out = Box::into_raw(Box::new(SnlsRecord { inner }));
        Ok(())
    })
}

/// # Safety
/// `rec` must be a handle from this library or NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snls_record_free(rec: *mut SnlsRecord) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Full record as JSON; free with [`snls_string_free`].
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_record_to_json(rec: *const SnlsRecord, out: *mut *mut c_char) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let rec = ref_arg(rec, "rec")?;
        let s = serde_json::to_string(&rec.inner).map_err(|e| (SnlsStatus::Runtime, e.to_string()))?;
        *out = into_c_string(s)?;
        Ok(())
    })
}

/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_record_summary(rec: *const SnlsRecord, out: *mut SnlsPathSummary) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let r = &ref_arg(rec, "rec")?.inner;
        let inf = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
        *out = SnlsPathSummary {
            completed: r.completed(),
            steps_completed: r.steps_completed as u64,
            sup_l2: r.sup_l2,
            x2_fifth: r.x2_fifth,
            x_norm: r.x_norm,
            mass_drift: r.mass_drift,
            boundary_mass: r.boundary_mass,
            stopping_time_m: inf(r.stopping_time_m),
            stopping_time_m_eps: inf(r.stopping_time_m_eps),
            saturation_time: inf(r.saturation_time),
        };
        Ok(())
    })
}

/// Copies the final field into `re`/`im` (each `len` doubles). `out_len`
/// receives the field length even when `len` is too small. Requires
/// `store_final_field` in the config.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_record_final_field(
    rec: *const SnlsRecord,
    re: *mut f64,
    im: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> SnlsStatus {
    guard(|| {
        out_arg(out_len, "out_len")?;
        let r = &ref_arg(rec, "rec")?.inner;
        let f = r
            .final_field
            .as_ref()
            .ok_or_else(|| invalid("record has no final field (set store_final_field)".into()))?;
        *out_len = f.re.len();
        if len < f.re.len() {
            return Err(invalid(format!("buffer holds {len} values, field has {}", f.re.len())));
        }
        out_arg(re, "re")?;
        out_arg(im, "im")?;
        ptr::copy_nonoverlapping(f.re.as_ptr(), re, f.re.len());
        ptr::copy_nonoverlapping(f.im.as_ptr(), im, f.im.len());
        Ok(())
    })
}

/// Grid of `n_points` (a power of two) on `[-L/2, L/2)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_grid_new(n_points: usize, domain_length: f64, out: *mut *mut SnlsGrid) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let inner = SpatialGrid::shared(n_points, domain_length).map_err(from_core)?;
        *out = Box::into_raw(Box::new(SnlsGrid { inner }));
        Ok(())
    })
}

/// # Safety
/// `grid` must be a handle from this library or NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snls_grid_free(grid: *mut SnlsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of points, 0 for NULL.
///
/// # Safety
/// `grid` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn snls_grid_n_points(grid: *const SnlsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.n_points())
}

/// Copies the grid abscissae into `x` (`len` must equal the point count).
///
/// # Safety
/// `x` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn snls_grid_points(grid: *const SnlsGrid, x: *mut f64, len: usize) -> SnlsStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.inner;
        out_arg(x, "x")?;
        if len != g.n_points() {
            return Err(invalid(format!("len {len} != n_points {}", g.n_points())));
        }
        ptr::copy_nonoverlapping(g.points().as_ptr(), x, len);
        Ok(())
    })
}

unsafe fn field_from(grid: &Arc<SpatialGrid>, re: *const f64, im: *const f64, len: usize) -> Result<Field, Failure> {
    if re.is_null() || im.is_null() {
        return Err(null("re/im"));
    }
    if len != grid.n_points() {
        return Err(invalid(format!("len {len} != n_points {}", grid.n_points())));
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    let values = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    Field::new(Arc::clone(grid), values).map_err(from_core)
}

/// Applies the free propagator `e^{itΔ}` in place.
///
/// # Safety
/// `re` and `im` must point to `len` readable and writable doubles.
#[no_mangle]
pub unsafe extern "C" fn snls_free_propagate(grid: *const SnlsGrid, re: *mut f64, im: *mut f64, len: usize, t: f64) -> SnlsStatus {
    guard(|| {
        let g = &ref_arg(grid, "grid")?.inner;
        if !t.is_finite() {
            return Err(invalid(format!("t must be finite, got {t}")));
        }
        let f = field_from(g, re, im, len)?.free_propagate(t);
        for (j, v) in f.values().iter().enumerate() {
            *re.add(j) = v.re;
            *im.add(j) = v.im;
        }
        Ok(())
    })
}

/// Discrete `L^p` norm (`p = inf` allowed).
///
/// # Safety
/// `re` and `im` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snls_lp_norm(
    grid: *const SnlsGrid,
    re: *const f64,
    im: *const f64,
    len: usize,
    p: f64,
    out: *mut f64,
) -> SnlsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let g = &ref_arg(grid, "grid")?.inner;
        *out = field_from(g, re, im, len)?.lp_norm(p).map_err(from_core)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_are_mapped() {
        assert_eq!(from_core(SnlsError::Config("x".into())).0, SnlsStatus::Config);
        assert_eq!(from_core(SnlsError::InvalidParameter("x".into())).0, SnlsStatus::InvalidArgument);
        assert_eq!(from_core(SnlsError::Runtime("x".into())).0, SnlsStatus::Runtime);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, SnlsStatus::Panic);
        let msg = unsafe { CStr::from_ptr(snls_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
