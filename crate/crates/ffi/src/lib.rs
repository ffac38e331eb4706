//! C ABI over the thinfiber solvers.
//!
//! Objects are opaque handles created by `tf_*_new`/`tf_*_from_json` and
//! released by the matching `tf_*_free`. Every call returns a [`TfStatus`];
//! on failure the message is kept per thread and read with
//! [`tf_last_error_message`]. Complex outputs are interleaved `re, im`
//! doubles in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thinfiber::description::parse_graph;
use thinfiber::error::Error;
use thinfiber::graph::MetricGraph;
use thinfiber::linalg::{c, CMat};
use thinfiber::model1d::{classify_gc, scattering_1d, GcClass, Potential1D, Side};
use thinfiber::solver::{eigenvalues_in_disk, scattering_matrix, EigenOptions, SpectralWindow};
use thinfiber::waveguide::{junction_scattering_fd, JunctionDomain2D};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfGcClass {
    DirichletGeneric = 0,
    MixedNeumannLeft = 1,
    MixedNeumannRight = 2,
    GeneralizedKirchhoff = 3,
}

/// Metric graph with vertex conditions.
pub struct TfGraph(MetricGraph);

/// Piecewise-constant potential on [−1, 1].
pub struct TfPotential(Potential1D);

/// Two-dimensional junction domain.
pub struct TfJunction(JunctionDomain2D);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> TfStatus {
    if e.is_numerical() {
        TfStatus::Numerical
    } else {
        TfStatus::InvalidInput
    }
}

fn guard(f: impl FnOnce() -> Result<(), TfStatus>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TfStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TfStatus::Panic
        }
    }
}

fn fail(e: Error) -> TfStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(name: &str) -> TfStatus {
    set_error(format!("{name} is null"));
    TfStatus::NullPointer
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, TfStatus> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, TfStatus> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        TfStatus::InvalidInput
    })
}

/// Writes `m` into `out` (capacity `cap` doubles) and its dimension into `dim`.
unsafe fn write_matrix(m: &CMat, out: *mut f64, cap: usize, dim: *mut usize) -> Result<(), TfStatus> {
    if dim.is_null() {
        return Err(null("dim"));
    }
    *dim = m.nrows();
    let need = 2 * m.nrows() * m.ncols();
    if cap < need {
        set_error(format!("output needs {need} doubles, got {cap}"));
        return Err(TfStatus::BufferTooSmall);
    }
    if out.is_null() {
        return Err(null("out"));
    }
    let buf = std::slice::from_raw_parts_mut(out, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let k = 2 * (i * m.ncols() + j);
            buf[k] = z.re;
            buf[k + 1] = z.im;
        }
    }
    Ok(())
}

/// Length in bytes of the last error message of this thread, without the NUL.
#[no_mangle]
pub extern "C" fn tf_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message, NUL-terminated, into `buf`.
///
/// # Safety
/// `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tf_last_error_message(buf: *mut c_char, cap: usize) -> TfStatus {
    if buf.is_null() {
        return TfStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if cap < msg.len() + 1 {
            return TfStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
        *buf.add(msg.len()) = 0;
        TfStatus::Ok
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a graph description (JSON, schema 1).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_graph_from_json(json: *const c_char, out: *mut *mut TfGraph) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = parse_graph(read_str(json, "json")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(TfGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must come from `tf_graph_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_graph_free(g: *mut TfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of infinite edges, the dimension of the scattering matrix.
///
/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tf_graph_lead_count(g: *const TfGraph, out: *mut usize) -> TfStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = g.0.infinite_edges().len();
        Ok(())
    })
}

/// Scattering matrix T(μ) on the infinite edges. `eps` is the thinness
/// parameter passed to λ-dependent vertex conditions.
///
/// # Safety
/// `g` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_graph_scattering_matrix(
    g: *const TfGraph,
    mu_re: f64,
    mu_im: f64,
    eps: f64,
    out: *mut f64,
    cap: usize,
    dim: *mut usize,
) -> TfStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        let t = scattering_matrix(&g.0, c(mu_re, mu_im), eps).map_err(fail)?;
        write_matrix(&t, out, cap, dim)
    })
}

/// Eigenvalues in the disk |μ| < radius of a compact graph. Writes up to
/// `cap` values (interleaved into `mu`, 2·cap doubles) with multiplicities;
/// `count` receives the number found even when `cap` is too small.
///
/// # Safety
/// `g` must be a live handle; `mu` must hold 2·cap doubles and `mult` cap entries.
#[no_mangle]
pub unsafe extern "C" fn tf_graph_eigenvalues(
    g: *const TfGraph,
    radius: f64,
    eps: f64,
    mu: *mut f64,
    mult: *mut usize,
    cap: usize,
    count: *mut usize,
) -> TfStatus {
    guard(|| {
        let g = as_ref(g, "graph")?;
        if count.is_null() {
            return Err(null("count"));
        }
        let eigs = eigenvalues_in_disk(&g.0, SpectralWindow::disk(radius), eps, &EigenOptions::default())
            .map_err(fail)?;
        *count = eigs.len();
        if cap < eigs.len() {
            set_error(format!("{} eigenvalues found, capacity {cap}", eigs.len()));
            return Err(TfStatus::BufferTooSmall);
        }
        if eigs.is_empty() {
            return Ok(());
        }
        if mu.is_null() || mult.is_null() {
            return Err(null("mu/mult"));
        }
        let mus = std::slice::from_raw_parts_mut(mu, 2 * eigs.len());
        let ms = std::slice::from_raw_parts_mut(mult, eigs.len());
        for (k, e) in eigs.iter().enumerate() {
            mus[2 * k] = e.mu.re;
            mus[2 * k + 1] = e.mu.im;
            ms[k] = e.multiplicity;
        }
        Ok(())
    })
}

/// Potential with `n` equal steps of the given values on [−1, 1].
///
/// # Safety
/// `values` must hold `n` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_new(values: *const f64, n: usize, out: *mut *mut TfPotential) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if values.is_null() {
            return Err(null("values"));
        }
        let v = Potential1D::new(std::slice::from_raw_parts(values, n).to_vec()).map_err(fail)?;
        *out = Box::into_raw(Box::new(TfPotential(v)));
        Ok(())
    })
}

/// # Safety
/// `p` must come from `tf_potential_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_free(p: *mut TfPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// 2×2 scattering matrix of −d² + ε⁻²v(t/ε) at energy λ; `out` holds 8 doubles.
///
/// # Safety
/// `p` must be a live handle and `out` hold 8 doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_scattering(
    p: *const TfPotential,
    eps: f64,
    lambda: f64,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let p = as_ref(p, "potential")?;
        let t = scattering_1d(&p.0, eps, c(lambda, 0.0)).map_err(fail)?;
        let mut dim = 0;
        write_matrix(&t, out, 8, &mut dim)
    })
}

/// Class of the ε → 0 gluing condition. For the generalized Kirchhoff class
/// the weights are written to `rho_minus`/`rho_plus`; otherwise both are 0.
///
/// # Safety
/// `p` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_potential_classify(
    p: *const TfPotential,
    class: *mut TfGcClass,
    rho_minus: *mut f64,
    rho_plus: *mut f64,
) -> TfStatus {
    guard(|| {
        let p = as_ref(p, "potential")?;
        if class.is_null() || rho_minus.is_null() || rho_plus.is_null() {
            return Err(null("output"));
        }
        let (k, rm, rp) = match classify_gc(&p.0).map_err(fail)?.class {
            GcClass::DirichletGeneric => (TfGcClass::DirichletGeneric, 0.0, 0.0),
            GcClass::MixedDN { neumann_side: Side::Left } => (TfGcClass::MixedNeumannLeft, 0.0, 0.0),
            GcClass::MixedDN { neumann_side: Side::Right } => (TfGcClass::MixedNeumannRight, 0.0, 0.0),
            GcClass::GeneralizedKirchhoff { rho_minus, rho_plus } => {
                (TfGcClass::GeneralizedKirchhoff, rho_minus, rho_plus)
            }
        };
        *class = k;
        *rho_minus = rm;
        *rho_plus = rp;
        Ok(())
    })
}

/// Parses a junction domain (JSON).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_junction_from_json(json: *const c_char, out: *mut *mut TfJunction) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = JunctionDomain2D::from_json_str(read_str(json, "json")?).map_err(fail)?;
        *out = Box::into_raw(Box::new(TfJunction(d)));
        Ok(())
    })
}

/// # Safety
/// `d` must come from `tf_junction_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_junction_free(d: *mut TfJunction) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Finite-difference scattering matrix of the junction at λ in the
/// single-mode window.
///
/// # Safety
/// `d` must be a live handle; `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn tf_junction_scattering(
    d: *const TfJunction,
    lambda: f64,
    h: f64,
    n_evanescent: usize,
    out: *mut f64,
    cap: usize,
    dim: *mut usize,
) -> TfStatus {
    guard(|| {
        let d = as_ref(d, "junction")?;
        let r = junction_scattering_fd(&d.0, lambda, h, n_evanescent).map_err(fail)?;
        write_matrix(&r.t, out, cap, dim)
    })
}
