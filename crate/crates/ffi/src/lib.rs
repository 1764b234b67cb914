//! C ABI over `netcm`.
//!
//! Every fallible call returns a [`NetcmStatus`]; on anything other than
//! `NETCM_STATUS_OK` the message is available from [`netcm_last_error`] on
//! the same thread. Objects are opaque and must be released with their
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use netcm::covariance::covariance_matrix;
use netcm::criteria::{trace_norm_criterion, xi_psd_report, CriterionReport, SplitBases};
use netcm::feasibility::{self, FeasibilityProblem, FeasibilityStatus, SolverOptions};
use netcm::spec::{ObservablesSpec, StateSpec, TopologySpec};
use netcm::states::{self, DensityOperator, GhzLevels};
use netcm::tensor::ncmx::load_ncmx;
use netcm::tensor::SubsystemLayout;
use netcm::{BlockCovarianceMatrix, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    Dimension = 4,
    Io = 5,
    Format = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetcmFeasibility {
    Feasible = 0,
    InfeasibleEvidence = 1,
    Inconclusive = 2,
}

/// Numeric part of a criterion report.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct NetcmReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct NetcmFeasibilityResult {
    pub status: NetcmFeasibility,
    pub residual: f64,
    pub iterations: usize,
}

/// Opaque density operator.
pub struct NetcmState(DensityOperator);

/// Opaque block covariance matrix.
pub struct NetcmCovariance(BlockCovarianceMatrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NetcmStatus {
    match e {
        Error::Io(_) => NetcmStatus::Io,
        Error::Format(_) | Error::Json(_) => NetcmStatus::Format,
        Error::Dimension(_) | Error::Layout(_) => NetcmStatus::Dimension,
        Error::InvalidState(_) | Error::NotHermitian { .. } | Error::NotTracePreserving { .. } => NetcmStatus::InvalidState,
        Error::NonConvergence(_) | Error::NoSignChange { .. } => NetcmStatus::Numerical,
        _ => NetcmStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> NetcmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NetcmStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            NetcmStatus::Panic
        }
    }
}

fn null_error(what: &str) -> Error {
    Error::InvalidArgument(format!("null pointer: {what}"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(null_error(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Error> {
    if out.is_null() {
        return Err(null_error("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn null_status(what: &str) -> NetcmStatus {
    set_error(&format!("null pointer: {what}"));
    NetcmStatus::NullPointer
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn netcm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn netcm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// GHZ state on `parties` systems of dimension `dim` over levels 0 and
/// `dim - 1`, mixed with white noise at visibility `v`.
///
/// # Safety
/// `out` must be a valid pointer to write the new handle to.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_ghz(parties: usize, dim: usize, v: f64, out: *mut *mut NetcmState) -> NetcmStatus {
    if out.is_null() {
        return null_status("out");
    }
    guard(|| {
        let rho = states::ghz_state(parties, dim, GhzLevels::Pair(0, dim.saturating_sub(1)))?;
        put(out, NetcmState(states::mix_white_noise(&rho, v)?))
    })
}

/// Builds a state from a JSON state specification (see the CLI docs).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_from_spec(json: *const c_char, out: *mut *mut NetcmState) -> NetcmStatus {
    if out.is_null() {
        return null_status("out");
    }
    guard(|| {
        let spec = StateSpec::from_json(str_arg(json, "json")?)?;
        put(out, NetcmState(spec.build()?))
    })
}

/// Loads an NCMX density matrix with `n_dims` factor dimensions labeled
/// `A, B, C, ...`.
///
/// # Safety
/// `path` must be NUL-terminated, `dims` must point to `n_dims` readable
/// values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_from_ncmx(
    path: *const c_char,
    dims: *const usize,
    n_dims: usize,
    out: *mut *mut NetcmState,
) -> NetcmStatus {
    if out.is_null() || dims.is_null() {
        return null_status(if out.is_null() { "out" } else { "dims" });
    }
    guard(|| {
        let m = load_ncmx(Path::new(str_arg(path, "path")?))?;
        let dims = std::slice::from_raw_parts(dims, n_dims).to_vec();
        let labels: Vec<String> = (0..n_dims).map(|k| ((b'A' + (k % 26) as u8) as char).to_string()).collect();
        put(out, NetcmState(DensityOperator::new(m, SubsystemLayout::new(dims, labels)?)?))
    })
}

/// Splits every factor into `d1 x d2`, producing a new state.
///
/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_split(
    state: *const NetcmState,
    d1: usize,
    d2: usize,
    out: *mut *mut NetcmState,
) -> NetcmStatus {
    if state.is_null() || out.is_null() {
        return null_status("state or out");
    }
    guard(|| put(out, NetcmState((*state).0.split_factors(d1, d2)?)))
}

/// Hilbert space dimension, 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_dim(state: *const NetcmState) -> usize {
    state.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `state` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn netcm_state_free(state: *mut NetcmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Covariance matrix for a named observable set: `pauli-z`, `w-set`,
/// `full-product` or `cluster-set`.
///
/// # Safety
/// `state` must be live, `observables` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn netcm_covariance(
    state: *const NetcmState,
    observables: *const c_char,
    out: *mut *mut NetcmCovariance,
) -> NetcmStatus {
    if state.is_null() || out.is_null() {
        return null_status("state or out");
    }
    guard(|| {
        let obs: ObservablesSpec = str_arg(observables, "observables")?.parse()?;
        let rho = &(*state).0;
        put(out, NetcmCovariance(covariance_matrix(&obs.build(rho)?, rho)?))
    })
}

/// Side length of the covariance matrix, 0 for a null handle.
///
/// # Safety
/// `cm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn netcm_covariance_dim(cm: *const NetcmCovariance) -> usize {
    cm.as_ref().map_or(0, |c| c.0.dim())
}

/// Copies the real part row-major into `buf`, which must hold `dim * dim` values.
///
/// # Safety
/// `cm` must be live and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn netcm_covariance_copy_real(cm: *const NetcmCovariance, buf: *mut f64, len: usize) -> NetcmStatus {
    if cm.is_null() || buf.is_null() {
        return null_status("cm or buf");
    }
    guard(|| {
        let re = (*cm).0.real_part();
        let n = re.nrows();
        if len < n * n {
            return Err(Error::Dimension(format!("buffer of {len} for a {n}x{n} matrix")));
        }
        let dst = std::slice::from_raw_parts_mut(buf, n * n);
        for i in 0..n {
            for j in 0..n {
                dst[i * n + j] = re[(i, j)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `cm` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn netcm_covariance_free(cm: *mut NetcmCovariance) {
    if !cm.is_null() {
        drop(Box::from_raw(cm));
    }
}

fn fill(out: *mut NetcmReport, r: &CriterionReport) {
    // SAFETY: callers check `out` for null first
    unsafe {
        *out = NetcmReport {
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            tolerance: r.tolerance,
            pass: r.pass,
        };
    }
}

/// Trace-norm criterion. `topology` is `triangle`, `pairwise`, `ring`,
/// `five-node` or a path to a JSON topology file.
///
/// # Safety
/// `cm` must be live, `topology` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn netcm_trace_norm(
    cm: *const NetcmCovariance,
    topology: *const c_char,
    out: *mut NetcmReport,
) -> NetcmStatus {
    if cm.is_null() || out.is_null() {
        return null_status("cm or out");
    }
    guard(|| {
        let gamma = &(*cm).0;
        let topo = str_arg(topology, "topology")?.parse::<TopologySpec>()?.build(gamma.node_labels())?;
        fill(out, &trace_norm_criterion(gamma, &topo)?);
        Ok(())
    })
}

/// Ξ positivity test; every node of `state` must have two factors.
///
/// # Safety
/// `state` must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn netcm_xi_psd(state: *const NetcmState, out: *mut NetcmReport) -> NetcmStatus {
    if state.is_null() || out.is_null() {
        return null_status("state or out");
    }
    guard(|| {
        let rho = &(*state).0;
        let split = SplitBases::gell_mann(rho.layout(), rho.nodes())?;
        fill(out, &xi_psd_report(rho, &split)?);
        Ok(())
    })
}

/// Source-decomposition feasibility search. Pass `tol <= 0` or
/// `max_iter == 0` for the defaults (1e-7, 50000).
///
/// # Safety
/// `cm` must be live, `topology` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn netcm_feasibility(
    cm: *const NetcmCovariance,
    topology: *const c_char,
    tol: f64,
    max_iter: usize,
    out: *mut NetcmFeasibilityResult,
) -> NetcmStatus {
    if cm.is_null() || out.is_null() {
        return null_status("cm or out");
    }
    guard(|| {
        let gamma = &(*cm).0;
        let topo = str_arg(topology, "topology")?.parse::<TopologySpec>()?.build(gamma.node_labels())?;
        let defaults = SolverOptions::default();
        let opts = SolverOptions {
            tol: if tol > 0.0 { tol } else { defaults.tol },
            max_iter: if max_iter > 0 { max_iter } else { defaults.max_iter },
        };
        let outcome = feasibility::solve(&FeasibilityProblem::new(gamma, &topo)?, &opts)?;
        *out = NetcmFeasibilityResult {
            status: match outcome.status {
                FeasibilityStatus::Feasible => NetcmFeasibility::Feasible,
                FeasibilityStatus::InfeasibleEvidence => NetcmFeasibility::InfeasibleEvidence,
                FeasibilityStatus::Inconclusive => NetcmFeasibility::Inconclusive,
            },
            residual: outcome.residual,
            iterations: outcome.iterations,
        };
        Ok(())
    })
}
