//! C ABI over the game pipeline.
//!
//! Reports are opaque handles created by `dra_run_*` and released with
//! `dra_report_free`. Every fallible call returns a [`DraStatus`]; on failure
//! `dra_last_error_message` describes the most recent error on the calling
//! thread. Strings returned as `char *` must be released with
//! `dra_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dra_market::case_study;
use dra_market::config::load_config;
use dra_market::cost_model::BidCurve;
use dra_market::game_engine::{play_game, GameConfig, GameReport, Mechanism, Variant};
use dra_market::market_clearing::{apply_caps, clear_two_sellers, RegulatoryCaps};
use dra_market::report::{render_report, summary, write_outputs, RunManifest};
use dra_market::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An index argument was outside the report.
    OutOfRange = 3,
    /// Configuration or input data failed validation.
    InvalidInput = 4,
    /// The computation failed (infeasible schedule, singular clearing, …).
    ComputeFailed = 5,
    /// Reading or writing a file failed.
    Io = 6,
    /// The report has no pure equilibrium to query.
    NoEquilibrium = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DraMechanism {
    NonCooperative = 0,
    Stackelberg = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DraMarketOutcome {
    pub p_a: f64,
    pub p_b: f64,
    pub phi_t: f64,
    pub price_capped: bool,
}

/// Opaque game report.
pub struct DraReport {
    report: GameReport,
    price_cap: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> DraStatus {
    match err.root() {
        Error::Io { .. } => DraStatus::Io,
        _ if err.exit_code() == 1 => DraStatus::InvalidInput,
        _ => DraStatus::ComputeFailed,
    }
}

fn fail(err: Error) -> DraStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> DraStatus) -> DraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == DraStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => {
            set_error("internal panic");
            DraStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, DraStatus> {
    if ptr.is_null() {
        set_error("path is null");
        return Err(DraStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(DraStatus::InvalidUtf8)
        }
    }
}

fn finish(config: GameConfig, out: *mut *mut DraReport) -> DraStatus {
    match play_game(&config) {
        Ok(report) => {
            let price_cap = (config.variant.mechanism == Mechanism::Stackelberg).then_some(config.caps.phi_max).flatten();
            let handle = Box::new(DraReport { report, price_cap });
            unsafe { *out = Box::into_raw(handle) };
            DraStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Plays the bundled case study under the given variant.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dra_run_case_study(mechanism: DraMechanism, dr: bool, out: *mut *mut DraReport) -> DraStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return DraStatus::NullArgument;
        }
        let mechanism = match mechanism {
            DraMechanism::NonCooperative => Mechanism::NonCooperative,
            DraMechanism::Stackelberg => Mechanism::Stackelberg,
        };
        match case_study::config_for(Variant { mechanism, dr }) {
            Ok(config) => finish(config, out),
            Err(e) => fail(e),
        }
    })
}

/// Loads a TOML game config and plays it.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dra_run_config(path: *const c_char, out: *mut *mut DraReport) -> DraStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return DraStatus::NullArgument;
        }
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_config(path) {
            Ok(config) => finish(config, out),
            Err(e) => fail(e),
        }
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from `dra_run_*` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn dra_report_free(report: *mut DraReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

unsafe fn report_ref<'a>(report: *const DraReport) -> Result<&'a DraReport, DraStatus> {
    report.as_ref().ok_or_else(|| {
        set_error("report is null");
        DraStatus::NullArgument
    })
}

/// Number of seller types: A's into `m_types`, B's into `n_types`.
///
/// # Safety
/// All pointers must be valid; `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dra_report_type_counts(report: *const DraReport, m_types: *mut usize, n_types: *mut usize) -> DraStatus {
    guard(|| {
        let r = match report_ref(report) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if m_types.is_null() || n_types.is_null() {
            set_error("output pointer is null");
            return DraStatus::NullArgument;
        }
        let (m, n) = r.report.conditional.type_counts();
        *m_types = m;
        *n_types = n;
        DraStatus::Ok
    })
}

/// Number of pure equilibria found; zero when none exists.
///
/// # Safety
/// `report` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn dra_report_equilibrium_count(report: *const DraReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.equilibrium.equilibria.len())
}

/// Zero-based strategy indices of equilibrium `index` (0 is the primary).
/// `actions_a` needs room for A's type count, `actions_b` for B's.
///
/// # Safety
/// Array pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn dra_report_equilibrium(
    report: *const DraReport,
    index: usize,
    actions_a: *mut usize,
    len_a: usize,
    actions_b: *mut usize,
    len_b: usize,
) -> DraStatus {
    guard(|| {
        let r = match report_ref(report) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if actions_a.is_null() || actions_b.is_null() {
            set_error("output array is null");
            return DraStatus::NullArgument;
        }
        let eqs = &r.report.equilibrium.equilibria;
        if eqs.is_empty() {
            set_error("no pure Bayesian Nash equilibrium");
            return DraStatus::NoEquilibrium;
        }
        let Some(e) = eqs.get(index) else {
            set_error(format!("equilibrium {index} of {}", eqs.len()));
            return DraStatus::OutOfRange;
        };
        if len_a < e.a.actions.len() || len_b < e.b.actions.len() {
            set_error("output arrays are shorter than the type counts");
            return DraStatus::OutOfRange;
        }
        std::slice::from_raw_parts_mut(actions_a, e.a.actions.len()).copy_from_slice(&e.a.actions);
        std::slice::from_raw_parts_mut(actions_b, e.b.actions.len()).copy_from_slice(&e.b.actions);
        DraStatus::Ok
    })
}

/// Interim expected payoff of `player` (`'A'` or `'B'`) of type `own_type`
/// at the primary equilibrium.
///
/// # Safety
/// `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dra_report_equilibrium_payoff(
    report: *const DraReport,
    player: c_char,
    own_type: usize,
    value: *mut f64,
) -> DraStatus {
    guard(|| {
        let r = match report_ref(report) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if value.is_null() {
            set_error("value is null");
            return DraStatus::NullArgument;
        }
        let Some(e) = r.report.equilibrium.primary() else {
            set_error("no pure Bayesian Nash equilibrium");
            return DraStatus::NoEquilibrium;
        };
        let payoffs = match player as u8 {
            b'A' => &e.payoff_a,
            b'B' => &e.payoff_b,
            _ => {
                set_error("player must be 'A' or 'B'");
                return DraStatus::OutOfRange;
            }
        };
        match payoffs.get(own_type) {
            Some(v) => {
                *value = *v;
                DraStatus::Ok
            }
            None => {
                set_error(format!("type {own_type} out of range"));
                DraStatus::OutOfRange
            }
        }
    })
}

/// One entry of an expected payoff matrix: `player` `'A'` or `'B'`, the
/// owner's type, the strategy row and the κ column, all zero-based.
///
/// # Safety
/// `value` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dra_report_expected_payoff(
    report: *const DraReport,
    player: c_char,
    own_type: usize,
    row: usize,
    column: usize,
    value: *mut f64,
) -> DraStatus {
    guard(|| {
        let r = match report_ref(report) {
            Ok(r) => r,
            Err(s) => return s,
        };
        if value.is_null() {
            set_error("value is null");
            return DraStatus::NullArgument;
        }
        let set = match player as u8 {
            b'A' => &r.report.expected.a,
            b'B' => &r.report.expected.b,
            _ => {
                set_error("player must be 'A' or 'B'");
                return DraStatus::OutOfRange;
            }
        };
        match set.get(own_type).and_then(|ep| ep.values().get((row, column))) {
            Some(v) => {
                *value = *v;
                DraStatus::Ok
            }
            None => {
                set_error(format!("entry ({own_type}, {row}, {column}) out of range"));
                DraStatus::OutOfRange
            }
        }
    })
}

/// Human-readable summary; release with `dra_string_free`. Null on error.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dra_report_summary(report: *const DraReport) -> *mut c_char {
    let Ok(r) = report_ref(report) else {
        return std::ptr::null_mut();
    };
    let text = summary(&r.report, r.price_cap);
    CString::new(text).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// Writes the report's CSV files, summary and manifest into `dir`.
///
/// # Safety
/// `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dra_report_write(report: *const DraReport, dir: *const c_char) -> DraStatus {
    guard(|| {
        let r = match report_ref(report) {
            Ok(r) => r,
            Err(s) => return s,
        };
        let dir = match path_arg(dir) {
            Ok(d) => d,
            Err(s) => return s,
        };
        let mut files = render_report(&r.report);
        if let Some(entry) = files.iter_mut().find(|(n, _)| n == "summary.txt") {
            entry.1 = summary(&r.report, r.price_cap);
        }
        let manifest = RunManifest::new("ffi", "", &r.report.variant.name(), dir, Vec::new());
        match write_outputs(dir, &files, manifest) {
            Ok(_) => DraStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn dra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Clears one market between two linear bids `λ = λ₀ + slope·P`, applying
/// `price_cap` when it is positive.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn dra_clear_two_sellers(
    lambda0_a: f64,
    slope_a: f64,
    lambda0_b: f64,
    slope_b: f64,
    demand: f64,
    price_cap: f64,
    out: *mut DraMarketOutcome,
) -> DraStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return DraStatus::NullArgument;
        }
        let bid = |lambda0, slope| BidCurve { lambda0, slope, p0: 0.0, p_max: f64::INFINITY };
        let cleared = match clear_two_sellers(&bid(lambda0_a, slope_a), &bid(lambda0_b, slope_b), demand) {
            Ok(o) => o,
            Err(e) => return fail(e),
        };
        let caps = RegulatoryCaps { phi_max: (price_cap > 0.0).then_some(price_cap), ..Default::default() };
        let o = apply_caps(&cleared, &caps);
        *out = DraMarketOutcome { p_a: o.p_a, p_b: o.p_b, phi_t: o.phi_t, price_capped: o.capped.price };
        DraStatus::Ok
    })
}
