//! C ABI over `kho-core`.
//!
//! Grids and fields cross the boundary as opaque heap handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns a [`KhoStatus`]; on failure the message is kept per thread and
//! can be copied out with [`kho_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kho_core::decoherence::{chi, diffuse};
use kho_core::grid::{read_snapshot, write_snapshot};
use kho_core::liouville::{classical_step_with, ClassicalScheme};
use kho_core::maps::{classify_origin, Stability};
use kho_core::metrics::dn;
use kho_core::wigner::quantum_step;
use kho_core::{coherent_state, integrate, make_grid, Field, FieldKind, KhoError, ModelParams, PhaseSpaceGrid};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

/// Which evolution a field follows.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KhoFieldKind {
    Quantum = 0,
    Classical = 1,
}

/// Opaque phase-space grid.
pub struct KhoGrid(PhaseSpaceGrid);

/// Opaque field on a grid.
pub struct KhoField(Field);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &KhoError) -> KhoStatus {
    match err {
        KhoError::GridMismatch | KhoError::KindMismatch { .. } => KhoStatus::GridMismatch,
        e if e.is_io() => KhoStatus::Io,
        KhoError::InvalidGrid(_)
        | KhoError::OutOfDomain(_)
        | KhoError::InvalidParameter(_)
        | KhoError::Incommensurate { .. }
        | KhoError::Config(_) => KhoStatus::InvalidArgument,
        _ => KhoStatus::Numerical,
    }
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), (KhoStatus, String)>) -> KhoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KhoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KhoStatus::Panic
        }
    }
}

fn core<T>(r: kho_core::Result<T>) -> Result<T, (KhoStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (KhoStatus, String)> {
    p.as_ref().ok_or((KhoStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), (KhoStatus, String)> {
    if p.is_null() {
        Err((KhoStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn kho_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Square grid on `[-extent, extent]^2` with `n_cells` per axis, spacing
/// adjusted so that it is compatible with `eta`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn kho_grid_new(extent: f64, n_cells: usize, eta: f64, out: *mut *mut KhoGrid) -> KhoStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let g = core(make_grid(extent, n_cells, eta))?;
        *out = Box::into_raw(Box::new(KhoGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle from `kho_grid_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kho_grid_free(grid: *mut KhoGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Node counts and spacings of a grid. Any output pointer may be null.
///
/// # Safety
/// `grid` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kho_grid_shape(
    grid: *const KhoGrid,
    nq: *mut usize,
    np: *mut usize,
    dq: *mut f64,
    dp: *mut f64,
) -> KhoStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        if !nq.is_null() {
            *nq = g.nq();
        }
        if !np.is_null() {
            *np = g.np();
        }
        if !dq.is_null() {
            *dq = g.dq();
        }
        if !dp.is_null() {
            *dp = g.dp();
        }
        Ok(())
    })
}

fn kind_of(k: KhoFieldKind) -> FieldKind {
    match k {
        KhoFieldKind::Quantum => FieldKind::Quantum,
        KhoFieldKind::Classical => FieldKind::Classical,
    }
}

/// Coherent-state Gaussian of width `eta` centred at `(q0, p0)`.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kho_field_coherent(
    grid: *const KhoGrid,
    q0: f64,
    p0: f64,
    eta: f64,
    kind: KhoFieldKind,
    out: *mut *mut KhoField,
) -> KhoStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let g = &deref(grid, "grid")?.0;
        let f = core(coherent_state(g, (q0, p0), eta, kind_of(kind)))?;
        *out = Box::into_raw(Box::new(KhoField(f)));
        Ok(())
    })
}

/// Field from `len` values laid out with `q` as the outer index.
///
/// # Safety
/// `grid` must be a live handle, `values` must point to `len` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kho_field_from_values(
    grid: *const KhoGrid,
    values: *const f64,
    len: usize,
    kind: KhoFieldKind,
    out: *mut *mut KhoField,
) -> KhoStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let g = &deref(grid, "grid")?.0;
        deref(values, "values")?;
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let f = core(Field::from_values(*g, v, kind_of(kind)))?;
        *out = Box::into_raw(Box::new(KhoField(f)));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn kho_field_free(field: *mut KhoField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of values in a field, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn kho_field_len(field: *const KhoField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// Copies the values out; `len` must equal [`kho_field_len`].
///
/// # Safety
/// `field` must be live and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn kho_field_values(field: *const KhoField, buf: *mut f64, len: usize) -> KhoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        out_ptr(buf, "buf")?;
        if len != f.values().len() {
            return Err((
                KhoStatus::InvalidArgument,
                format!("buffer holds {len} values, field has {}", f.values().len()),
            ));
        }
        ptr::copy_nonoverlapping(f.values().as_ptr(), buf, len);
        Ok(())
    })
}

/// Riemann integral of the field.
///
/// # Safety
/// `field` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kho_field_mass(field: *const KhoField, out: *mut f64) -> KhoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        out_ptr(out, "out")?;
        *out = integrate(f);
        Ok(())
    })
}

/// Advances a field by one kick period in place: quantum fields follow the
/// Wigner evolution, classical ones the Liouville evolution, both with
/// diffusion `d` per period.
///
/// # Safety
/// `field` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn kho_field_step(field: *mut KhoField, k: f64, eta: f64, nu_tau: f64, d: f64) -> KhoStatus {
    guard(|| {
        let f = &mut field.as_mut().ok_or((KhoStatus::NullPointer, "field is null".to_string()))?.0;
        let params = ModelParams { k, nu_tau, eta };
        core(params.validate())?;
        let next = match f.kind() {
            FieldKind::Quantum => core(quantum_step(f, &params, d))?,
            FieldKind::Classical => {
                let scheme = if d > 0.0 {
                    ClassicalScheme::Spectral
                } else {
                    ClassicalScheme::SemiLagrangian
                };
                core(classical_step_with(f, &params, d, scheme))?.0
            }
        };
        *f = next;
        Ok(())
    })
}

/// Diffuses a field in place with variance `2d` per axis.
///
/// # Safety
/// `field` must be a live handle not used concurrently.
#[no_mangle]
pub unsafe extern "C" fn kho_field_diffuse(field: *mut KhoField, d: f64) -> KhoStatus {
    guard(|| {
        let f = &mut field.as_mut().ok_or((KhoStatus::NullPointer, "field is null".to_string()))?.0;
        *f = core(diffuse(f, d))?;
        Ok(())
    })
}

/// L1 distance between two fields on the same grid.
///
/// # Safety
/// Both fields must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kho_dn(a: *const KhoField, b: *const KhoField, out: *mut f64) -> KhoStatus {
    guard(|| {
        let (a, b) = (&deref(a, "a")?.0, &deref(b, "b")?.0);
        out_ptr(out, "out")?;
        *out = core(dn(a, b))?;
        Ok(())
    })
}

/// Semiclassical parameter `K eta^4 / D^{3/2}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kho_chi(k: f64, eta: f64, d: f64, out: *mut f64) -> KhoStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = core(chi(k, eta, d))?;
        Ok(())
    })
}

/// 1 if the origin is an elliptic fixed point of the classical map, 0 if
/// it is hyperbolic or parabolic.
#[no_mangle]
pub extern "C" fn kho_origin_is_elliptic(k: f64, nu_tau: f64) -> i32 {
    i32::from(classify_origin(k, nu_tau).kind == Stability::Elliptic)
}

fn path_arg<'a>(p: *const c_char) -> Result<&'a str, (KhoStatus, String)> {
    if p.is_null() {
        return Err((KhoStatus::NullPointer, "path is null".into()));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| (KhoStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Writes a binary snapshot of the field.
///
/// # Safety
/// `field` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn kho_field_save(field: *const KhoField, path: *const c_char) -> KhoStatus {
    guard(|| {
        let f = &deref(field, "field")?.0;
        core(write_snapshot(path_arg(path)?, f))
    })
}

/// Reads a binary snapshot into a new field and, optionally, its grid.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` writable, and `out_grid`
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn kho_field_load(
    path: *const c_char,
    kind: KhoFieldKind,
    out: *mut *mut KhoField,
    out_grid: *mut *mut KhoGrid,
) -> KhoStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let snap = core(read_snapshot(path_arg(path)?))?;
        let g = snap.grid;
        let f = core(snap.into_field(kind_of(kind)))?;
        *out = Box::into_raw(Box::new(KhoField(f)));
        if !out_grid.is_null() {
            *out_grid = Box::into_raw(Box::new(KhoGrid(g)));
        }
        Ok(())
    })
}
