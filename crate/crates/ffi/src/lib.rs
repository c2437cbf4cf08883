//! C ABI over `conewave`.
//!
//! Scenes and surfaces cross the boundary as opaque handles created by
//! `cw_*_from_*` / `cw_surface_*` and released with the matching `*_free`.
//! Every fallible call returns a [`CwStatus`]; on failure a message is kept
//! per thread and can be read with [`cw_last_error_message`].

use conewave::assumptions;
use conewave::surface::{self, ConeSurface, PolygonScene, SurfacePoint};
use conewave::words;
use conewave::{Error, Vec2};
use num_rational::Rational64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidScene = 3,
    RemovableConePoint = 4,
    InteriorPoint = 5,
    Constraint = 6,
    Unsupported = 7,
    Cfl = 8,
    InvalidArgument = 9,
    OutOfRange = 10,
    Io = 11,
    Json = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwVerdict {
    Pass = 0,
    Fail = 1,
    Indeterminate = 2,
}

/// Opaque polygon scene.
pub struct CwScene(PolygonScene);

/// Opaque cone surface.
pub struct CwSurface(ConeSurface);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CwStatus {
    match e {
        Error::RemovableConePoint { .. } => CwStatus::RemovableConePoint,
        Error::InvalidScene(_) => CwStatus::InvalidScene,
        Error::InteriorPoint { .. } => CwStatus::InteriorPoint,
        Error::Constraint(_) => CwStatus::Constraint,
        Error::Unsupported(_) => CwStatus::Unsupported,
        Error::Cfl { .. } => CwStatus::Cfl,
        Error::InvalidArgument(_) | Error::Bundle(_) => CwStatus::InvalidArgument,
        Error::Io(_) => CwStatus::Io,
        Error::Json(_) => CwStatus::Json,
    }
}

struct Fail(CwStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CwStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            CwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CwStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CwStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(CwStatus::NullPointer, format!("{what} is null")))
}

fn verdict(pass: bool, indeterminate: bool) -> CwVerdict {
    if indeterminate {
        CwVerdict::Indeterminate
    } else if pass {
        CwVerdict::Pass
    } else {
        CwVerdict::Fail
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scene from JSON text.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_scene_from_json(json: *const c_char, out: *mut *mut CwScene) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let scene = PolygonScene::from_json(str_arg(json, "json")?)?;
        scene.validate()?;
        *out = Box::into_raw(Box::new(CwScene(scene)));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from `cw_scene_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cw_scene_free(scene: *mut CwScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Doubled exterior of a polygon scene (a branched cover for slit scenes).
///
/// # Safety
/// `scene` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_double(scene: *const CwScene, out: *mut *mut CwSurface) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = surface::surface_from_scene(&ref_arg(scene, "scene")?.0)?;
        *out = Box::into_raw(Box::new(CwSurface(s)));
        Ok(())
    })
}

/// Loads a surface previously serialized by the library.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_from_json(json: *const c_char, out: *mut *mut CwSurface) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s: ConeSurface = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        s.audit()?;
        *out = Box::into_raw(Box::new(CwSurface(s)));
        Ok(())
    })
}

/// Serializes a surface; release the string with `cw_string_free`.
///
/// # Safety
/// `surface` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_to_json(surface: *const CwSurface, out: *mut *mut c_char) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = ref_arg(surface, "surface")?;
        *out = CString::new(s.0.to_json()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `surface` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_free(surface: *mut CwSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_cone_count(surface: *const CwSurface, out: *mut usize) -> CwStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(surface, "surface")?.0.cone_points.len();
        Ok(())
    })
}

/// Total angle of cone point `index`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_cone_angle(surface: *const CwSurface, index: usize, out: *mut f64) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = ref_arg(surface, "surface")?;
        let c = s.0.cone_points.get(index).ok_or_else(|| {
            Fail(CwStatus::OutOfRange, format!("cone index {index} out of range ({})", s.0.cone_points.len()))
        })?;
        *out = c.angle;
        Ok(())
    })
}

/// Plane position of cone point `index`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_cone_position(
    surface: *const CwSurface,
    index: usize,
    x: *mut f64,
    y: *mut f64,
) -> CwStatus {
    guard(|| {
        let s = ref_arg(surface, "surface")?;
        let (x, y) = (out_arg(x, "x")?, out_arg(y, "y")?);
        let c = s.0.cone_points.get(index).ok_or_else(|| {
            Fail(CwStatus::OutOfRange, format!("cone index {index} out of range ({})", s.0.cone_points.len()))
        })?;
        (*x, *y) = (c.position.x, c.position.y);
        Ok(())
    })
}

/// Smallest distance between two cone points (+inf with fewer than two).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_min_cone_distance(surface: *const CwSurface, out: *mut f64) -> CwStatus {
    guard(|| {
        *out_arg(out, "out")? = surface::min_cone_distance(&ref_arg(surface, "surface")?.0);
        Ok(())
    })
}

/// Geodesic distance between `(sheet_a, xa, ya)` and `(sheet_b, xb, yb)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_surface_distance(
    surface: *const CwSurface,
    sheet_a: usize,
    xa: f64,
    ya: f64,
    sheet_b: usize,
    xb: f64,
    yb: f64,
    out: *mut f64,
) -> CwStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = &ref_arg(surface, "surface")?.0;
        let (a, b) = (Vec2::new(xa, ya), Vec2::new(xb, yb));
        if sheet_a >= s.sheets.len() || sheet_b >= s.sheets.len() {
            return Err(Fail(CwStatus::OutOfRange, "sheet index out of range".into()));
        }
        s.locate(sheet_a, a)?;
        s.locate(sheet_b, b)?;
        *out = s.distance(SurfacePoint { sheet: sheet_a, pos: a }, SurfacePoint { sheet: sheet_b, pos: b });
        Ok(())
    })
}

/// Sampled non-trapping check. `t0` receives the escape-time certificate on
/// a pass and NaN otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_check_nontrapping(
    surface: *const CwSurface,
    samples: usize,
    horizon: f64,
    seed: u64,
    verdict_out: *mut CwVerdict,
    t0: *mut f64,
) -> CwStatus {
    guard(|| {
        let (v, t0) = (out_arg(verdict_out, "verdict")?, out_arg(t0, "t0")?);
        let r = assumptions::check_nontrapping(&ref_arg(surface, "surface")?.0, samples, horizon, seed)?;
        let ind = matches!(r.verdict, assumptions::NonTrappingVerdict::Indeterminate { .. });
        *v = verdict(r.passed(), ind);
        *t0 = r.t0().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Collinear-triple check over cone-to-cone geodesics up to `max_length`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_check_collinear(
    surface: *const CwSurface,
    max_length: f64,
    fan: usize,
    verdict_out: *mut CwVerdict,
    witnesses: *mut usize,
) -> CwStatus {
    guard(|| {
        let (v, w) = (out_arg(verdict_out, "verdict")?, out_arg(witnesses, "witnesses")?);
        if fan == 0 || !(max_length > 0.0) {
            return Err(Fail(CwStatus::InvalidArgument, "fan and max_length must be positive".into()));
        }
        let r = assumptions::check_collinear(&ref_arg(surface, "surface")?.0, max_length, fan);
        *v = verdict(r.passed(), false);
        *w = r.witnesses.len();
        Ok(())
    })
}

/// Flat conjugacy check; `certificates` receives the number of geodesics examined.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_check_conjugacy(
    surface: *const CwSurface,
    t_max: f64,
    fan: usize,
    verdict_out: *mut CwVerdict,
    certificates: *mut usize,
) -> CwStatus {
    guard(|| {
        let (v, c) = (out_arg(verdict_out, "verdict")?, out_arg(certificates, "certificates")?);
        if fan == 0 {
            return Err(Fail(CwStatus::InvalidArgument, "fan must be positive".into()));
        }
        let r = assumptions::check_conjugacy(&ref_arg(surface, "surface")?.0, t_max, fan)?;
        *v = verdict(r.passed(), false);
        *c = r.certificates.len();
        Ok(())
    })
}

/// Smoothing schedule for target order `s_num / s_den` in dimension `n`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cw_huygens_schedule(
    s_num: i64,
    s_den: i64,
    n: u32,
    t0: f64,
    k: *mut u64,
    t_s: *mut f64,
) -> CwStatus {
    guard(|| {
        let (k, t_s) = (out_arg(k, "k")?, out_arg(t_s, "t_s")?);
        if s_den == 0 {
            return Err(Fail(CwStatus::InvalidArgument, "s_den must be nonzero".into()));
        }
        let h = words::huygens_schedule(Rational64::new(s_num, s_den), n, t0)?;
        (*k, *t_s) = (h.k, h.t_s);
        Ok(())
    })
}
