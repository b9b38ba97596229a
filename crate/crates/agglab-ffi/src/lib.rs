//! C ABI over the aggregation library.
//!
//! Conventions: every fallible call returns an [`AgglabStatus`] and writes
//! results through out-pointers, which are touched only on `AGGLAB_STATUS_OK`.
//! Heap objects travel as opaque handles with paired `_free` functions; a
//! null handle is a no-op to free and an error to read. After any non-OK
//! status, [`agglab_last_error`] retrieves a human-readable message for the
//! calling thread. Panics never cross the boundary; they surface as
//! `AGGLAB_STATUS_INTERNAL`.
//!
//! The matching header is generated into `include/agglab.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use agglab::minimax::{self, MinimaxResult};
use agglab::rules::{randomized_difference_rule, SymmetricRule};
use agglab::signal_model::SignalModel;
use agglab::Error;

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AgglabStatus {
    /// Success; out-pointers hold the results.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were structurally invalid (bad JSON, empty weights, ...).
    InvalidArgument = 2,
    /// A size, degree, or budget fell outside the supported range.
    OutOfRange = 3,
    /// The solver failed or one of its self-checks rejected the result.
    SolverFailure = 4,
    /// An output buffer was smaller than the reported required length.
    BufferTooSmall = 5,
    /// Internal invariant violation (caught panic). Please report.
    Internal = 6,
}

/// Opaque handle: one solved minimax instance with its certificate.
pub struct AgglabMinimax(MinimaxResult);

/// Opaque handle: a variance profile over subsets of agents.
pub struct AgglabModel(SignalModel);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(e: &Error) -> AgglabStatus {
    set_error(e.to_string());
    match e {
        Error::AgentOutOfRange { .. }
        | Error::AgentCountOutOfRange { .. }
        | Error::UniverseTooLarge { .. }
        | Error::BudgetOutOfRange { .. }
        | Error::GridOutOfRange { .. }
        | Error::DegreeOutOfRange { .. }
        | Error::WeightSizeOutOfRange { .. }
        | Error::ExactSearchTooLarge { .. } => AgglabStatus::OutOfRange,
        Error::Solver(_)
        | Error::Certificate(_)
        | Error::SelfCheck { .. }
        | Error::SingularSystem
        | Error::ExactSearchBudget => AgglabStatus::SolverFailure,
        _ => AgglabStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> AgglabStatus) -> AgglabStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        AgglabStatus::Internal
    })
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error("null pointer argument");
            return AgglabStatus::NullArgument;
        })+
    };
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `cap` bytes, and returns the full
/// message length in bytes (excluding the NUL). With a null `buf` or zero
/// `cap`, nothing is written and only the length is returned. The message is
/// meaningful only after a non-OK status on the same thread.
///
/// # Safety
/// A non-null `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn agglab_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let take = msg.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, take);
                *buf.add(take) = 0;
            }
        }
        msg.len()
    })
}

/// Writes the interval minimax level `2 / (q^d + q^-d)` with
/// `q = (sqrt(n) + 1) / (sqrt(n) - 1)` to `out`. Requires `n >= 2`, `d >= 1`.
///
/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_closed_form_value(n: usize, d: usize, out: *mut f64) -> AgglabStatus {
    guarded(|| {
        nonnull!(out);
        match minimax::closed_form_value(n, d) {
            Ok(v) => {
                unsafe { *out = v };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the closed-form sandwich on the squared worst-case error of the
/// best depth-`d` rule among `n` agents: `lower <= optimum^2 <= upper`.
///
/// # Safety
/// `lower` and `upper` must each be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_error_bounds(
    n: usize,
    d: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(lower, upper);
        match minimax::bounds(n, d) {
            Ok((lo, up)) => {
                unsafe {
                    *lower = lo;
                    *upper = up;
                }
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the exact worst-case normalized error of the randomized `d`-query
/// difference rule, `1 - d/n`. Requires `1 <= d < n <= 16`.
///
/// # Safety
/// `out` must be valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_randomized_worst_error(
    n: usize,
    d: usize,
    out: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(out);
        let run = || randomized_difference_rule(n, d)?.worst_case_error();
        match run() {
            Ok((worst, _)) => {
                unsafe { *out = worst };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Worst-case normalized error of the size-symmetric intersection rule whose
/// weight on every size-`k` subset is `betas[k-1]`, over all `n`-agent
/// variance profiles. `betas` holds `len >= 1` finite values; `n <= 24`.
///
/// # Safety
/// `betas` must point to `len` readable doubles; `out` must be valid for
/// writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_symmetric_worst_error(
    n: usize,
    betas: *const f64,
    len: usize,
    out: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(betas, out);
        let weights = unsafe { std::slice::from_raw_parts(betas, len) };
        let run = || SymmetricRule::new(weights.to_vec())?.worst_case_error(n);
        match run() {
            Ok((worst, _)) => {
                unsafe { *out = worst };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Solves the degree-`d` minimax problem on the integer grid `{1, ..., n}`
/// and stores a handle to the certified result in `out`. Requires
/// `2 <= n <= 2000` and `1 <= d <= min(n - 1, 30)`. Free with
/// `agglab_minimax_free`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_solve(
    n: usize,
    d: usize,
    out: *mut *mut AgglabMinimax,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(out);
        match minimax::discrete_minimax(n, d) {
            Ok(r) => {
                unsafe { *out = Box::into_raw(Box::new(AgglabMinimax(r))) };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a solve handle. Null is a no-op.
///
/// # Safety
/// A non-null `handle` must come from `agglab_minimax_solve` and must not be
/// used (or freed) again afterwards.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_free(handle: *mut AgglabMinimax) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Writes the optimal level (the un-squared minimax value) to `out`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `out` must be
/// valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_value(
    handle: *const AgglabMinimax,
    out: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.value };
        AgglabStatus::Ok
    })
}

/// Evaluates the optimal polynomial at `t` (numerically stable on `[0, n]`)
/// and writes the value to `out`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `out` must be
/// valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_eval(
    handle: *const AgglabMinimax,
    t: f64,
    out: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.grid_poly.eval(t) };
        AgglabStatus::Ok
    })
}

/// Writes the optimal polynomial's coefficient count (`d + 1`) to `out`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `out` must be
/// valid for writing one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_poly_len(
    handle: *const AgglabMinimax,
    out: *mut usize,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.poly.coeffs().len() };
        AgglabStatus::Ok
    })
}

/// Copies the optimal polynomial's monomial coefficients, constant term
/// first (always exactly 1), into `buf`. `cap` must be at least the length
/// reported by `agglab_minimax_poly_len`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `buf` must
/// point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_poly(
    handle: *const AgglabMinimax,
    buf: *mut f64,
    cap: usize,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, buf);
        let coeffs = unsafe { (*handle).0.poly.coeffs() };
        if cap < coeffs.len() {
            set_error(format!("need capacity {}, got {cap}", coeffs.len()));
            return AgglabStatus::BufferTooSmall;
        }
        unsafe { std::ptr::copy_nonoverlapping(coeffs.as_ptr(), buf, coeffs.len()) };
        AgglabStatus::Ok
    })
}

/// Writes the number of alternation points in the optimality certificate
/// (always `d + 1`) to `out`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `out` must be
/// valid for writing one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_certificate_len(
    handle: *const AgglabMinimax,
    out: *mut usize,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.alternation.len() };
        AgglabStatus::Ok
    })
}

/// Copies the certificate into parallel arrays: `points[i]` is the i-th grid
/// point where the optimal level is attained and `signs[i]` is the sign of
/// the polynomial there (`+1`/`-1`, strictly alternating). `cap` applies to
/// both arrays and must cover the length from
/// `agglab_minimax_certificate_len`.
///
/// # Safety
/// `handle` must be a live result from `agglab_minimax_solve`; `points` and
/// `signs` must point to `cap` writable elements each.
#[no_mangle]
pub unsafe extern "C" fn agglab_minimax_certificate(
    handle: *const AgglabMinimax,
    points: *mut i64,
    signs: *mut i8,
    cap: usize,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, points, signs);
        let alternation = unsafe { &(*handle).0.alternation };
        if cap < alternation.len() {
            set_error(format!("need capacity {}, got {cap}", alternation.len()));
            return AgglabStatus::BufferTooSmall;
        }
        for (i, &(t, s)) in alternation.iter().enumerate() {
            unsafe {
                *points.add(i) = t as i64;
                *signs.add(i) = s;
            }
        }
        AgglabStatus::Ok
    })
}

/// Parses a variance profile from its JSON form (`{"n": ..., "signals":
/// [{"subset": [...], "variance": ..., "family": "gaussian"}, ...]}`) and
/// stores a handle in `out`. Free with `agglab_model_free`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writing
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn agglab_model_parse(
    json: *const c_char,
    out: *mut *mut AgglabModel,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(json, out);
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("model JSON is not valid UTF-8");
                return AgglabStatus::InvalidArgument;
            }
        };
        match SignalModel::from_json(text) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(AgglabModel(m))) };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds the adversarial profile with unit variance on every singleton
/// subset of `n` agents and stores a handle in `out`. Requires `n <= 16`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn agglab_model_singletons(
    n: usize,
    out: *mut *mut AgglabModel,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(out);
        match agglab::rules::adversarial_singleton_model(n) {
            Ok(m) => {
                unsafe { *out = Box::into_raw(Box::new(AgglabModel(m))) };
                AgglabStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// A non-null `handle` must come from a model constructor and must not be
/// used (or freed) again afterwards.
#[no_mangle]
pub unsafe extern "C" fn agglab_model_free(handle: *mut AgglabModel) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Writes the model's agent count to `out`.
///
/// # Safety
/// `handle` must be a live model handle; `out` must be valid for writing one
/// `size_t`.
#[no_mangle]
pub unsafe extern "C" fn agglab_model_agents(
    handle: *const AgglabModel,
    out: *mut usize,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.n() };
        AgglabStatus::Ok
    })
}

/// Writes the sum of all signal variances to `out`.
///
/// # Safety
/// `handle` must be a live model handle; `out` must be valid for writing one
/// double.
#[no_mangle]
pub unsafe extern "C" fn agglab_model_total_variance(
    handle: *const AgglabModel,
    out: *mut f64,
) -> AgglabStatus {
    guarded(|| {
        nonnull!(handle, out);
        unsafe { *out = (*handle).0.total_variance() };
        AgglabStatus::Ok
    })
}
