//! C ABI for the rsma-jam optimizer.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every fallible call returns an [`RsjStatus`];
//! on failure a message is available from [`rsj_last_error_message`] on the
//! same thread until the next failing call. Strings returned through `char**`
//! out-parameters are freed with [`rsj_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rsma_jam::channel::ChannelSet;
use rsma_jam::expcli::{cell_inputs, run_cells, write_outputs, ExperimentConfig, ResultTable};
use rsma_jam::optimizer::{optimize, Scheme, Solution};
use rsma_jam::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsjStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Unsupported = 4,
    Config = 5,
    /// The optimization problem has no strictly feasible point.
    Infeasible = 6,
    Numerical = 7,
    Io = 8,
    /// An index argument was out of range.
    OutOfRange = 9,
    /// The experiment ran but some cells have no result.
    Partial = 10,
    /// Internal panic caught at the boundary.
    Panic = 11,
}

/// Transmission scheme.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsjScheme {
    Rsma = 0,
    Sdma = 1,
}

impl From<RsjScheme> for Scheme {
    fn from(s: RsjScheme) -> Self {
        match s {
            RsjScheme::Rsma => Scheme::Rsma,
            RsjScheme::Sdma => Scheme::Sdma,
        }
    }
}

/// Experiment configuration with its channel realization.
pub struct RsjScenario {
    config: ExperimentConfig,
    channels: ChannelSet,
    pilots: Vec<Vec<usize>>,
}

/// Optimized precoders and their rate report.
pub struct RsjSolution {
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> RsjStatus {
    match err {
        Error::InvalidInput(_) => RsjStatus::InvalidInput,
        Error::Unsupported(_) => RsjStatus::Unsupported,
        Error::Infeasible { .. } => RsjStatus::Infeasible,
        Error::NumericalFailure(_) => RsjStatus::Numerical,
        Error::Config(_) | Error::Json(_) => RsjStatus::Config,
        Error::Io { .. } | Error::Csv(_) => RsjStatus::Io,
    }
}

struct Failure(RsjStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f` behind a panic guard and records any failure.
fn guard(f: impl FnOnce() -> Result<RsjStatus, Failure>) -> RsjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RsjStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: callers pass pointers obtained from this library or valid for reads.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(RsjStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(RsjStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(p)
    }
}

/// # Safety
/// `s` must be null or a NUL-terminated string valid for reads.
unsafe fn utf8<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(RsjStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(RsjStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(RsjStatus::InvalidInput, "string contains NUL".into()))
}

/// Message of the last failing call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rsj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rsj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a scenario from an experiment config in JSON. Omitted fields take
/// their defaults, so `"{}"` is the default grid.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_scenario_from_json(
    config_json: *const c_char,
    out: *mut *mut RsjScenario,
) -> RsjStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let config = ExperimentConfig::from_json(utf8(config_json, "config_json")?)?;
        config.validate()?;
        let channels = rsma_jam::expcli::build_channels(&config)?;
        let pilots = config.resolved_pilots()?;
        *out = Box::into_raw(Box::new(RsjScenario {
            config,
            channels,
            pilots,
        }));
        Ok(RsjStatus::Ok)
    })
}

/// # Safety
/// `scenario` must be null or a handle from [`rsj_scenario_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsj_scenario_free(scenario: *mut RsjScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of SNR points in the scenario, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_scenario_num_snr(scenario: *const RsjScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.config.snr_db.len())
}

/// Number of pilot sets in the scenario, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_scenario_num_pilot_sets(scenario: *const RsjScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.pilots.len())
}

/// Optimizes one cell of the scenario grid. The result is identical to the
/// corresponding cell of [`rsj_run_experiment`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_optimize(
    scenario: *const RsjScenario,
    snr_index: usize,
    pilot_set_index: usize,
    scheme: RsjScheme,
    out: *mut *mut RsjSolution,
) -> RsjStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let s = non_null(scenario, "scenario")?;
        if snr_index >= s.config.snr_db.len() || pilot_set_index >= s.pilots.len() {
            return Err(Failure(
                RsjStatus::OutOfRange,
                format!("cell ({snr_index}, {pilot_set_index}) is outside the grid"),
            ));
        }
        let (csit, stats, solve) = cell_inputs(
            &s.config,
            &s.channels,
            snr_index,
            &s.pilots[pilot_set_index],
            scheme.into(),
        )?;
        let solution = optimize(&csit, &stats, &solve)?;
        *out = Box::into_raw(Box::new(RsjSolution { solution }));
        Ok(RsjStatus::Ok)
    })
}

/// # Safety
/// `solution` must be null or a handle from [`rsj_optimize`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_free(solution: *mut RsjSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Sum-rate in bits per subcarrier, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_sum_rate(solution: *const RsjSolution) -> f64 {
    solution
        .as_ref()
        .map_or(f64::NAN, |s| s.solution.report.sum_rate)
}

/// Common-stream rate in bits per subcarrier, or NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_common_rate(solution: *const RsjSolution) -> f64 {
    solution
        .as_ref()
        .map_or(f64::NAN, |s| s.solution.report.common_rate)
}

/// Number of users, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_num_users(solution: *const RsjSolution) -> usize {
    solution
        .as_ref()
        .map_or(0, |s| s.solution.report.num_users())
}

/// Rate of user `k` (private plus its common share) in bits per subcarrier.
///
/// # Safety
/// `solution` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_user_rate(
    solution: *const RsjSolution,
    k: usize,
    out: *mut f64,
) -> RsjStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let report = &non_null(solution, "solution")?.solution.report;
        if k >= report.num_users() {
            return Err(Failure(RsjStatus::OutOfRange, format!("no user {k}")));
        }
        *out = report.user_rate(k);
        Ok(RsjStatus::Ok)
    })
}

/// Smallest average jamming margin over the jammed pilots. Writes NaN
/// when the scenario has no adversaries.
///
/// # Safety
/// `solution` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_jam_margin(
    solution: *const RsjSolution,
    out: *mut f64,
) -> RsjStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = non_null(solution, "solution")?
            .solution
            .report
            .min_jamming_margin()
            .unwrap_or(f64::NAN);
        Ok(RsjStatus::Ok)
    })
}

/// Outer iterations run, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_iterations(solution: *const RsjSolution) -> usize {
    solution
        .as_ref()
        .map_or(0, |s| s.solution.report.diagnostics.outer_iterations)
}

/// Whether the outer loop met its tolerance before the iteration cap.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_converged(solution: *const RsjSolution) -> bool {
    solution
        .as_ref()
        .is_some_and(|s| s.solution.report.diagnostics.converged)
}

/// Full rate report and precoders as JSON.
///
/// # Safety
/// `solution` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_solution_to_json(
    solution: *const RsjSolution,
    out: *mut *mut c_char,
) -> RsjStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let s = &non_null(solution, "solution")?.solution;
        let json = serde_json::json!({
            "report": s.report,
            "precoders": s.precoders,
        });
        *out = into_c_string(json.to_string())?;
        Ok(RsjStatus::Ok)
    })
}

/// Runs the whole grid of a JSON experiment config and returns the result
/// table as CSV. With a non-null `out_dir` all output files are written
/// there as well. Returns [`RsjStatus::Partial`], with the CSV, when some
/// cells have no result.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_dir` must be null or
/// one; `csv_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rsj_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    csv_out: *mut *mut c_char,
) -> RsjStatus {
    guard(|| {
        let csv_out = out_ptr(csv_out, "csv_out")?;
        *csv_out = ptr::null_mut();
        let config = ExperimentConfig::from_json(utf8(config_json, "config_json")?)?;
        let cells = run_cells(&config, None)?;
        let table = if out_dir.is_null() {
            ResultTable {
                users: config.users,
                rows: cells.iter().map(|c| c.row.clone()).collect(),
            }
        } else {
            write_outputs(Path::new(utf8(out_dir, "out_dir")?), &config, &cells, false)?
        };
        *csv_out = into_c_string(table.to_csv()?)?;
        if table.rows.iter().all(|r| r.status.has_result()) {
            Ok(RsjStatus::Ok)
        } else {
            set_error("some cells have no result");
            Ok(RsjStatus::Partial)
        }
    })
}
