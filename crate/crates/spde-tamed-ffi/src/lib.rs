//! C ABI for the solver: opaque experiment handles and JSON results.
//!
//! An experiment wraps one parsed run configuration (the same JSON or TOML
//! documents the command line tool reads). Results come back as
//! NUL-terminated JSON strings with exactly the schemas the CLI writes to
//! its output directory; strings are allocated by Rust and must be released
//! with `spde_string_free`. Every fallible call returns a status code and
//! records a human-readable message retrievable with `spde_last_error`.
//!
//! The generated header lives at `include/spde_tamed.h` and is refreshed on
//! every build.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spde_tamed::cli;
use spde_tamed::config::Config;
use spde_tamed::error::{Error, Result};
use spde_tamed::lyapunov::mc_estimate;
use spde_tamed::verify::run_all;

/// Opaque handle owning a parsed run configuration.
pub struct SpdeExperiment {
    cfg: Config,
}

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdeStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer argument was null or text was not valid UTF-8.
    InvalidArgument = 1,
    /// The configuration could not be parsed, resolved, or satisfied.
    Config = 2,
    /// A structural check failed; the report is still returned.
    Invariant = 3,
    /// Result encoding failed.
    Io = 4,
    /// An internal panic was caught at the boundary.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let clean: String = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &Error) -> SpdeStatus {
    match e.exit_code() {
        2 => SpdeStatus::Config,
        3 => SpdeStatus::Invariant,
        4 => SpdeStatus::Io,
        _ => SpdeStatus::Internal,
    }
}

fn fail(e: &Error) -> SpdeStatus {
    set_last_error(&e.to_string());
    status_of(e)
}

unsafe fn text_arg<'a>(ptr: *const c_char, what: &str) -> std::result::Result<&'a str, SpdeStatus> {
    if ptr.is_null() {
        set_last_error(&format!("{what}: null pointer"));
        return Err(SpdeStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(&format!("{what}: invalid UTF-8"));
        SpdeStatus::InvalidArgument
    })
}

unsafe fn experiment<'a>(
    exp: *const SpdeExperiment,
) -> std::result::Result<&'a SpdeExperiment, SpdeStatus> {
    exp.as_ref().ok_or_else(|| {
        set_last_error("experiment: null pointer");
        SpdeStatus::InvalidArgument
    })
}

/// Runs `f`, stores its string through `out`, and returns the status the
/// closure chose (closures report `Ok` unless a document describes a
/// failure, as with a failing verification). Panics never cross the ABI.
unsafe fn produce_string_with(
    out: *mut *mut c_char,
    f: impl FnOnce() -> Result<(String, SpdeStatus)>,
) -> SpdeStatus {
    if out.is_null() {
        set_last_error("out: null pointer");
        return SpdeStatus::InvalidArgument;
    }
    *out = ptr::null_mut();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok((text, status))) => match CString::new(text) {
            Ok(c) => {
                *out = c.into_raw();
                status
            }
            Err(_) => {
                set_last_error("result contained an interior NUL byte");
                SpdeStatus::Internal
            }
        },
        Ok(Err(e)) => fail(&e),
        Err(_) => {
            set_last_error("internal panic");
            SpdeStatus::Internal
        }
    }
}

unsafe fn produce_string(out: *mut *mut c_char, f: impl FnOnce() -> Result<String>) -> SpdeStatus {
    produce_string_with(out, || f().map(|text| (text, SpdeStatus::Ok)))
}

fn estimate_impl(cfg: &Config, seed: u64, paths: u64) -> Result<String> {
    let paths = if paths == 0 { cfg.paths } else { paths };
    if paths == 0 {
        return Err(Error::config("paths: must be > 0"));
    }
    let dm = cfg.build_discrete_model()?;
    let part = cfg.build_partition()?;
    let ic = cfg.build_initial(&dm)?;
    let est = mc_estimate(&dm, &part, &ic, paths as usize, cfg.batches as usize, seed)?;
    cli::estimate_document_json(cfg, &est, part.mesh())
}

fn verify_impl(cfg: &Config, seed: u64) -> Result<(String, SpdeStatus)> {
    let dm = cfg.build_discrete_model()?;
    let part = cfg.build_partition()?;
    let reports = run_all(&dm, &part, &cfg.verify_options(seed))?;
    let text = cli::verify_document_json(cfg, seed, &reports)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok((text, SpdeStatus::Ok))
    } else {
        set_last_error(&format!("verification failed: {}", failed.join(", ")));
        Ok((text, SpdeStatus::Invariant))
    }
}

fn bound_impl(cfg: &Config, mesh: f64) -> Result<String> {
    let params = cfg.build_bound_params()?;
    let meshes = if mesh.is_finite() && mesh > 0.0 {
        vec![mesh]
    } else {
        cfg.sweep_meshes()?
    };
    cli::bound_document_json(&params, &meshes)
}

/// Returns the library version as a static NUL-terminated string.
/// The pointer is valid for the lifetime of the process; do not free it.
#[no_mangle]
pub extern "C" fn spde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Returns the message recorded by the most recent failing call on this
/// thread, or an empty string when nothing has failed yet. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn spde_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a configuration document and returns a new experiment through
/// `out`. Set `toml` to parse TOML; otherwise the text is read as JSON.
/// On any failure `*out` is null. Release the handle with
/// `spde_experiment_free`.
///
/// # Safety
/// `config_text` must be a valid NUL-terminated string and `out` must point
/// to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_experiment_new(
    config_text: *const c_char,
    toml: bool,
    out: *mut *mut SpdeExperiment,
) -> SpdeStatus {
    if out.is_null() {
        set_last_error("out: null pointer");
        return SpdeStatus::InvalidArgument;
    }
    *out = ptr::null_mut();
    let text = match text_arg(config_text, "config_text") {
        Ok(t) => t,
        Err(status) => return status,
    };
    match catch_unwind(AssertUnwindSafe(|| Config::parse_str(text, toml))) {
        Ok(Ok(cfg)) => {
            *out = Box::into_raw(Box::new(SpdeExperiment { cfg }));
            SpdeStatus::Ok
        }
        Ok(Err(e)) => fail(&e),
        Err(_) => {
            set_last_error("internal panic");
            SpdeStatus::Internal
        }
    }
}

/// Releases an experiment handle. Passing null is a no-op.
///
/// # Safety
/// `exp` must be null or a pointer returned by `spde_experiment_new` that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn spde_experiment_free(exp: *mut SpdeExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Releases a string returned by this library. Passing null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer produced by one of the `*_json` calls that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn spde_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the experiment's fully resolved configuration (all defaults
/// filled in) through `out` as canonical JSON.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_canonical_config_json(
    exp: *const SpdeExperiment,
    out: *mut *mut c_char,
) -> SpdeStatus {
    let exp = match experiment(exp) {
        Ok(e) => e,
        Err(status) => return status,
    };
    produce_string(out, || exp.cfg.resolved()?.to_canonical_json())
}

/// Runs the Monte Carlo exponential-moment estimator and writes the
/// estimate document (same schema as the CLI's `estimate.json`) through
/// `out`. `paths` overrides the configured path count; pass 0 to keep the
/// configured value. Results are a deterministic function of the
/// configuration, `seed`, and `paths`.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_estimate_json(
    exp: *const SpdeExperiment,
    seed: u64,
    paths: u64,
    out: *mut *mut c_char,
) -> SpdeStatus {
    let exp = match experiment(exp) {
        Ok(e) => e,
        Err(status) => return status,
    };
    produce_string(out, || estimate_impl(&exp.cfg, seed, paths))
}

/// Runs the structural check battery and writes the report (same schema as
/// the CLI's `verify.json`) through `out`. When at least one check fails
/// the report is still written and the call returns the `Invariant`
/// status, mirroring the CLI's nonzero exit.
///
/// # Safety
/// `exp` must be a live experiment handle and `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_verify_json(
    exp: *const SpdeExperiment,
    seed: u64,
    out: *mut *mut c_char,
) -> SpdeStatus {
    let exp = match experiment(exp) {
        Ok(e) => e,
        Err(status) => return status,
    };
    produce_string_with(out, || verify_impl(&exp.cfg, seed))
}

/// Evaluates the closed-form moment bound in nested-log space and writes
/// the table (same schema as the CLI's `bound.json`) through `out`. A
/// positive finite `mesh` evaluates that single mesh; any other value uses
/// the configured sweep meshes (or the partition mesh when none are set).
///
/// # Safety
/// `exp` must be a live experiment handle and `out` must point to writable
/// memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn spde_bound_json(
    exp: *const SpdeExperiment,
    mesh: f64,
    out: *mut *mut c_char,
) -> SpdeStatus {
    let exp = match experiment(exp) {
        Ok(e) => e,
        Err(status) => return status,
    };
    produce_string(out, || bound_impl(&exp.cfg, mesh))
}
