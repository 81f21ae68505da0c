//! C ABI over the eigenhess library.
//!
//! Every function returns an [`EhStatus`]. Handles are opaque and owned by the caller
//! until passed to the matching `_free`. On failure the message is kept per thread and
//! read back with [`eh_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eigenhess::bounds::{
    dirichlet_ratio_constant, neumann_collar_constant, AlphaVariant, BoundOptions, BoundReport, DirichletBoundInputs,
    NeumannBoundInputs,
};
use eigenhess::geometry::{GeometryModel, Vec4};
use eigenhess::spectra::{enumerate_eigenpairs, sup_norms, BoundaryCondition, EigenPair};
use eigenhess::Error;

pub const EH_BC_DIRICHLET: u32 = 0;
pub const EH_BC_NEUMANN: u32 = 1;
pub const EH_ALPHA_PRINTED: u32 = 0;
pub const EH_ALPHA_SQRT: u32 = 1;
/// Length of the gradient buffer filled by [`eh_eigenpairs_eval`].
pub const EH_GRAD_LEN: usize = 4;
/// Length of the row-major Hessian buffer filled by [`eh_eigenpairs_eval`].
pub const EH_HESS_LEN: usize = 16;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    OutOfRange = 3,
    BufferTooSmall = 4,
    Domain = 10,
    Collar = 11,
    Argument = 12,
    Degenerate = 13,
    Capability = 14,
    Chart = 15,
    NonFinite = 16,
    Config = 17,
    Io = 18,
    Panic = 99,
}

/// Opaque geometry model.
pub struct EhGeometry(GeometryModel);

/// Opaque list of eigenpairs.
pub struct EhEigenpairs(Vec<EigenPair>);

/// Opaque bound report.
pub struct EhReport(BoundReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Fail(EhStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Domain(_) => EhStatus::Domain,
            Error::Collar(_) => EhStatus::Collar,
            Error::Argument(_) => EhStatus::Argument,
            Error::Degenerate(_) => EhStatus::Degenerate,
            Error::Capability(_) => EhStatus::Capability,
            Error::Chart(_) => EhStatus::Chart,
            Error::NonFinite(_) => EhStatus::NonFinite,
            Error::Config(_) => EhStatus::Config,
            Error::Io(_) => EhStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EhStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            EhStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            EhStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

/// Copies `s` NUL-terminated into `buf`; `needed` always receives the full size including the NUL.
unsafe fn copy_string(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err(Fail(EhStatus::BufferTooSmall, format!("buffer holds {cap} bytes, {n} needed")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

fn boundary_condition(bc: u32) -> Result<BoundaryCondition, Fail> {
    match bc {
        EH_BC_DIRICHLET => Ok(BoundaryCondition::Dirichlet),
        EH_BC_NEUMANN => Ok(BoundaryCondition::Neumann),
        other => Err(Fail(EhStatus::OutOfRange, format!("boundary condition code {other}"))),
    }
}

fn alpha_variant(v: u32) -> Result<AlphaVariant, Fail> {
    match v {
        EH_ALPHA_PRINTED => Ok(AlphaVariant::Printed),
        EH_ALPHA_SQRT => Ok(AlphaVariant::Sqrt),
        other => Err(Fail(EhStatus::OutOfRange, format!("alpha variant code {other}"))),
    }
}

/// Copies the calling thread's last error message. Returns the size needed including the NUL.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn eh_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let s = e.borrow();
        let n = s.len() + 1;
        if !buf.is_null() && cap > 0 {
            let k = s.len().min(cap - 1);
            ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, k);
            *buf.add(k) = 0;
        }
        n
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn eh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Catalog model by name: interval, square, disk, ball, hemisphere, hemisphere3.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_by_name(name: *const c_char, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let s = CStr::from_ptr(name).to_str().map_err(|e| Fail(EhStatus::InvalidUtf8, e.to_string()))?;
        emit(out, EhGeometry(GeometryModel::by_name(s)?))
    })
}

/// Interval `[0, length]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_interval(length: f64, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| emit(out, EhGeometry(GeometryModel::interval(length)?)))
}

/// Box with the given edge lengths, one to four of them.
///
/// # Safety
/// `edges` must be valid for `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_box(edges: *const f64, len: usize, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| {
        if edges.is_null() {
            return Err(null("edges"));
        }
        let e = std::slice::from_raw_parts(edges, len);
        emit(out, EhGeometry(GeometryModel::boxed(e)?))
    })
}

/// Disk of the given radius.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_disk(radius: f64, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| emit(out, EhGeometry(GeometryModel::disk(radius)?)))
}

/// Three-dimensional ball of the given radius.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_ball(radius: f64, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| emit(out, EhGeometry(GeometryModel::ball(radius)?)))
}

/// Geodesic cap of polar angle `theta` on the unit `n`-sphere.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_spherical_cap(n: usize, theta: f64, out: *mut *mut EhGeometry) -> EhStatus {
    guard(|| emit(out, EhGeometry(GeometryModel::spherical_cap(n, theta)?)))
}

/// Intrinsic dimension and the number of ambient coordinates points use.
///
/// # Safety
/// `g` must come from an `eh_geometry_*` constructor; outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_dimension(g: *const EhGeometry, dim: *mut usize, ambient: *mut usize) -> EhStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.0;
        if !dim.is_null() {
            *dim = g.dimension;
        }
        if !ambient.is_null() {
            *ambient = g.ambient_dim();
        }
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_geometry_free(g: *mut EhGeometry) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// The first `count` eigenpairs in ascending eigenvalue order.
///
/// # Safety
/// `g` must be a live geometry handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_enumerate(g: *const EhGeometry, bc: u32, count: usize, out: *mut *mut EhEigenpairs) -> EhStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.0;
        let pairs = enumerate_eigenpairs(g, boundary_condition(bc)?, count)?;
        emit(out, EhEigenpairs(pairs))
    })
}

unsafe fn nth<'a>(p: *const EhEigenpairs, i: usize) -> Result<&'a EigenPair, Fail> {
    let list = &deref(p, "eigenpairs")?.0;
    list.get(i).ok_or_else(|| Fail(EhStatus::OutOfRange, format!("index {i} of {}", list.len())))
}

/// # Safety
/// `p` must be a live eigenpair list; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_len(p: *const EhEigenpairs, len: *mut usize) -> EhStatus {
    guard(|| write(len, deref(p, "eigenpairs")?.0.len()))
}

/// # Safety
/// `p` must be a live eigenpair list; `lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_lambda(p: *const EhEigenpairs, i: usize, lambda: *mut f64) -> EhStatus {
    guard(|| write(lambda, nth(p, i)?.lambda))
}

/// Value, gradient and row-major Hessian of pair `i` at the ambient point `x`.
///
/// Unused trailing components are zero. Any output may be null.
///
/// # Safety
/// `x` must be valid for `len` doubles, `grad` for [`EH_GRAD_LEN`], `hess` for [`EH_HESS_LEN`].
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_eval(
    p: *const EhEigenpairs,
    i: usize,
    x: *const f64,
    len: usize,
    value: *mut f64,
    grad: *mut f64,
    hess: *mut f64,
) -> EhStatus {
    guard(|| {
        let e = nth(p, i)?;
        if x.is_null() {
            return Err(null("x"));
        }
        if len > 4 {
            return Err(Fail(EhStatus::OutOfRange, format!("point has {len} coordinates, at most 4")));
        }
        let mut v = Vec4::zeros();
        for (k, c) in std::slice::from_raw_parts(x, len).iter().enumerate() {
            v[k] = *c;
        }
        let (f, df, d2f) = e.eval_all(&v);
        if !value.is_null() {
            *value = f;
        }
        if !grad.is_null() {
            for k in 0..EH_GRAD_LEN {
                *grad.add(k) = df[k];
            }
        }
        if !hess.is_null() {
            for r in 0..4 {
                for c in 0..4 {
                    *hess.add(4 * r + c) = d2f[(r, c)];
                }
            }
        }
        Ok(())
    })
}

/// Sup norms of the value, gradient and Hessian of pair `i`, written to `out[0..3]`.
///
/// # Safety
/// Handles must be live and `g` the geometry the pairs came from; `out` valid for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_sup_norms(p: *const EhEigenpairs, i: usize, g: *const EhGeometry, out: *mut f64) -> EhStatus {
    guard(|| {
        let e = nth(p, i)?;
        let g = &deref(g, "geometry")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = sup_norms(e, g);
        for (k, v) in [s.phi_sup.value, s.grad_sup.value, s.hess_sup.value].into_iter().enumerate() {
            *out.add(k) = v;
        }
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_eigenpairs_free(p: *mut EhEigenpairs) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dirichlet Hessian constant at eigenvalue `lambda`.
///
/// # Safety
/// `g` must be a live geometry handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_bound_dirichlet(
    g: *const EhGeometry,
    lambda: f64,
    variant: u32,
    k_floor: f64,
    out: *mut *mut EhReport,
) -> EhStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.0;
        let o = BoundOptions { alpha_variant: alpha_variant(variant)?, k_floor };
        let r = dirichlet_ratio_constant(&DirichletBoundInputs::from_model(g, lambda, k_floor), &o)?;
        emit(out, EhReport(r))
    })
}

/// Neumann Hessian constant at eigenvalue `lambda`.
///
/// # Safety
/// `g` must be a live geometry handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn eh_bound_neumann(g: *const EhGeometry, lambda: f64, out: *mut *mut EhReport) -> EhStatus {
    guard(|| {
        let g = &deref(g, "geometry")?.0;
        let r = neumann_collar_constant(&NeumannBoundInputs::from_model(g, lambda), &BoundOptions::default())?;
        emit(out, EhReport(r))
    })
}

/// The constant multiplying `lambda`, and the bound on the Hessian-to-value sup ratio.
///
/// # Safety
/// `r` must be a live report; outputs must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn eh_report_values(r: *const EhReport, constant: *mut f64, ratio_bound: *mut f64) -> EhStatus {
    guard(|| {
        let r = &deref(r, "report")?.0;
        if !constant.is_null() {
            *constant = r.constant;
        }
        if !ratio_bound.is_null() {
            *ratio_bound = r.ratio_bound;
        }
        Ok(())
    })
}

/// The full report as JSON. `needed` receives the size including the NUL even on failure.
///
/// # Safety
/// `r` must be a live report; `buf` null or valid for `cap` bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn eh_report_json(r: *const EhReport, buf: *mut c_char, cap: usize, needed: *mut usize) -> EhStatus {
    guard(|| copy_string(&deref(r, "report")?.0.to_json(), buf, cap, needed))
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn eh_report_free(r: *mut EhReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
