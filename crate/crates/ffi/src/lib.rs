//! C ABI for the simulator.
//!
//! All objects cross the boundary as opaque handles created and released by
//! matching `*_new`/`*_free` style functions. Every fallible call returns a
//! [`SchistoStatus`]; on failure a description is available from
//! [`schisto_last_error`] on the same thread. Strings handed to the caller
//! are NUL-terminated and must be released with [`schisto_string_free`].
//!
//! The generated header lives at `include/schisto.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use schisto_core::config::{parse_config, render_config, ConfigFile};
use schisto_core::coupling::{replicate_seed, run_trajectory, PeriodRecord, Trajectory};
use schisto_core::ecology::steady_state_run;
use schisto_core::experiments::{monte_carlo, scenario_suite, without_harvest, Metric, PanelSummary};
use schisto_core::output::write_summary_csv;
use schisto_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchistoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    SolverFailed = 4,
    IntegrationDiverged = 5,
    IoError = 6,
    Panic = 7,
}

/// Tracked outcomes, in summary order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchistoMetric {
    InfectionRate = 0,
    LaborAvail = 1,
    LaborFood = 2,
    LaborVeg = 3,
    Leisure = 4,
    FertPerHa = 5,
    VegStockT = 6,
    QvKg = 7,
    IncomeKfcfa = 8,
    Utility = 9,
}

impl From<SchistoMetric> for Metric {
    fn from(m: SchistoMetric) -> Self {
        Metric::ALL[m as usize]
    }
}

/// Opaque simulation configuration.
pub struct SchistoConfig(ConfigFile);

/// Opaque single trajectory.
pub struct SchistoTrajectory(Trajectory);

/// Opaque set of summary cells.
pub struct SchistoSummary(Vec<PanelSummary>);

/// One simulated year, copied out of a trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SchistoPeriodRecord {
    pub year: u32,
    pub infected: u32,
    pub a_l: f64,
    pub labor_food: f64,
    pub labor_veg: f64,
    pub leisure: f64,
    pub fert_kg: f64,
    pub fert_per_ha: f64,
    pub q_v: f64,
    pub veg_stock: f64,
    pub income_kfcfa: f64,
    pub utility: f64,
    pub prevalence_next: f64,
}

impl From<&PeriodRecord> for SchistoPeriodRecord {
    fn from(r: &PeriodRecord) -> Self {
        SchistoPeriodRecord {
            year: r.year,
            infected: r.infected,
            a_l: r.a_l,
            labor_food: r.labor_food,
            labor_veg: r.labor_veg,
            leisure: r.leisure,
            fert_kg: r.fert_kg,
            fert_per_ha: r.fert_per_ha,
            q_v: r.q_v,
            veg_stock: r.veg_stock,
            income_kfcfa: r.income_kfcfa,
            utility: r.utility,
            prevalence_next: r.prevalence_next,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SchistoBand {
    pub median: f64,
    pub p05: f64,
    pub p95: f64,
}

/// Outcome of an ecology-only steady-state check.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SchistoSteadyState {
    pub final_prevalence: f64,
    /// Relative change over the final year: vegetation, susceptible and
    /// infected snails, miracidia, cercariae, susceptible and infected humans.
    pub final_year_drift: [f64; 7],
    pub steady: bool,
    pub clamps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SchistoStatus {
    match e.root() {
        Error::Config { .. } => SchistoStatus::ConfigError,
        Error::SolverFailed { .. } => SchistoStatus::SolverFailed,
        Error::IntegrationDiverged { .. } => SchistoStatus::IntegrationDiverged,
        Error::Io(_) | Error::File { .. } => SchistoStatus::IoError,
        _ => SchistoStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (SchistoStatus, String)>) -> SchistoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SchistoStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SchistoStatus::Panic
        }
    }
}

fn fail(e: Error) -> (SchistoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SchistoStatus, String) {
    (SchistoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SchistoStatus, String)> {
    // SAFETY: the caller guarantees `p` is null or a live handle of type T.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SchistoStatus, String)> {
    // SAFETY: as for `borrow`, with exclusive access.
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), (SchistoStatus, String)> {
    let c = CString::new(s).map_err(|e| (SchistoStatus::InvalidArgument, e.to_string()))?;
    // SAFETY: `out` was checked for null by the caller.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Copies the calling thread's most recent error message, or returns null
/// when there is none. Release with [`schisto_string_free`].
#[no_mangle]
pub extern "C" fn schisto_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn schisto_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// A configuration holding every default.
#[no_mangle]
pub extern "C" fn schisto_config_default() -> *mut SchistoConfig {
    Box::into_raw(Box::new(SchistoConfig(ConfigFile::default())))
}

/// Parses configuration text (UTF-8, NUL-terminated) into a new handle.
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_parse(
    text: *const c_char,
    out: *mut *mut SchistoConfig,
) -> SchistoStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(text) }.to_str().map_err(|e| {
            (
                SchistoStatus::InvalidArgument,
                format!("config is not UTF-8: {e}"),
            )
        })?;
        let cfg = parse_config(text).map_err(fail)?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(SchistoConfig(cfg))) };
        Ok(())
    })
}

/// Renders the effective configuration as configuration-file text.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_render(
    cfg: *const SchistoConfig,
    out: *mut *mut c_char,
) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow(cfg, "cfg") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(render_config(&cfg.0), out)
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_free(cfg: *mut SchistoConfig) {
    if !cfg.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_set_seed(cfg: *mut SchistoConfig, seed: u64) -> SchistoStatus {
    guard(|| {
        unsafe { borrow_mut(cfg, "cfg") }?.0.sim.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_set_years(cfg: *mut SchistoConfig, years: u32) -> SchistoStatus {
    guard(|| {
        if years == 0 {
            return Err((SchistoStatus::InvalidArgument, "years must be >= 1".into()));
        }
        unsafe { borrow_mut(cfg, "cfg") }?.0.sim.years = years;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_set_land(cfg: *mut SchistoConfig, land_ha: f64) -> SchistoStatus {
    guard(|| {
        if !(land_ha.is_finite() && land_ha > 0.0) {
            return Err((
                SchistoStatus::InvalidArgument,
                format!("land must be > 0 ha, got {land_ha}"),
            ));
        }
        unsafe { borrow_mut(cfg, "cfg") }?.0.sim.land_ha = land_ha;
        Ok(())
    })
}

/// Enables or disables vegetation harvest. Disabling also zeroes the
/// harvest productivity, matching the no-harvest scenario.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_config_set_harvest(cfg: *mut SchistoConfig, allow: bool) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow_mut(cfg, "cfg") }?;
        if allow {
            cfg.0.sim.allow_harvest = true;
            cfg.0.sim.hh.beta_v = ConfigFile::default().sim.hh.beta_v;
        } else {
            cfg.0.sim = without_harvest(&cfg.0.sim);
        }
        Ok(())
    })
}

/// Runs one trajectory with the random stream of replicate `index` under
/// the configured master seed.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_run_trajectory(
    cfg: *const SchistoConfig,
    index: u64,
    out: *mut *mut SchistoTrajectory,
) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow(cfg, "cfg") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let seed = replicate_seed(cfg.0.sim.seed, index);
        let traj = run_trajectory(&cfg.0.sim, seed).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(SchistoTrajectory(traj))) };
        Ok(())
    })
}

/// Number of yearly records, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_trajectory_len(traj: *const SchistoTrajectory) -> usize {
    unsafe { traj.as_ref() }.map_or(0, |t| t.0.records.len())
}

/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_trajectory_record(
    traj: *const SchistoTrajectory,
    index: usize,
    out: *mut SchistoPeriodRecord,
) -> SchistoStatus {
    guard(|| {
        let traj = unsafe { borrow(traj, "traj") }?;
        let out = unsafe { borrow_mut(out, "out") }?;
        let record = traj.0.records.get(index).ok_or_else(|| {
            (
                SchistoStatus::InvalidArgument,
                format!("record {index} out of range (len {})", traj.0.records.len()),
            )
        })?;
        *out = record.into();
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn schisto_trajectory_free(traj: *mut SchistoTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Replicated runs of the configured cell, summarized into one cell.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_monte_carlo(
    cfg: *const SchistoConfig,
    replicates: usize,
    out: *mut *mut SchistoSummary,
) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow(cfg, "cfg") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = monte_carlo(&cfg.0.sim, replicates, cfg.0.sim.seed).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(SchistoSummary(vec![s]))) };
        Ok(())
    })
}

/// The six-cell scenario suite (three land endowments, with and without
/// harvest).
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_scenario_suite(
    cfg: *const SchistoConfig,
    replicates: usize,
    out: *mut *mut SchistoSummary,
) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow(cfg, "cfg") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = scenario_suite(&cfg.0.sim, replicates, cfg.0.sim.seed).map_err(fail)?;
        unsafe { *out = Box::into_raw(Box::new(SchistoSummary(s))) };
        Ok(())
    })
}

/// Number of cells, or 0 for a null handle.
///
/// # Safety
/// `summary` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn schisto_summary_cells(summary: *const SchistoSummary) -> usize {
    unsafe { summary.as_ref() }.map_or(0, |s| s.0.len())
}

/// Median and 5-95% band of `metric` in `year` (1-based) of `cell`.
///
/// # Safety
/// `summary` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_summary_band(
    summary: *const SchistoSummary,
    cell: usize,
    year: u32,
    metric: SchistoMetric,
    out: *mut SchistoBand,
) -> SchistoStatus {
    guard(|| {
        let summary = unsafe { borrow(summary, "summary") }?;
        let out = unsafe { borrow_mut(out, "out") }?;
        let s = summary.0.get(cell).ok_or_else(|| {
            (
                SchistoStatus::InvalidArgument,
                format!("cell {cell} out of range ({} cells)", summary.0.len()),
            )
        })?;
        if year == 0 || year > s.years() {
            return Err((
                SchistoStatus::InvalidArgument,
                format!("year {year} outside 1..={}", s.years()),
            ));
        }
        let b = s.band(year, metric.into());
        *out = SchistoBand {
            median: b.median,
            p05: b.p05,
            p95: b.p95,
        };
        Ok(())
    })
}

/// The summary as CSV text.
///
/// # Safety
/// `summary` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_summary_csv(
    summary: *const SchistoSummary,
    out: *mut *mut c_char,
) -> SchistoStatus {
    guard(|| {
        let summary = unsafe { borrow(summary, "summary") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut buf = Vec::new();
        write_summary_csv(&summary.0, &mut buf).map_err(fail)?;
        let text = String::from_utf8(buf).map_err(|e| (SchistoStatus::IoError, e.to_string()))?;
        give_string(text, out)
    })
}

/// # Safety
/// `summary` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn schisto_summary_free(summary: *mut SchistoSummary) {
    if !summary.is_null() {
        drop(unsafe { Box::from_raw(summary) });
    }
}

/// Ecology-only run of `years` years from the configured starting state.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn schisto_steady_state(
    cfg: *const SchistoConfig,
    years: u32,
    out: *mut SchistoSteadyState,
) -> SchistoStatus {
    guard(|| {
        let cfg = unsafe { borrow(cfg, "cfg") }?;
        let out = unsafe { borrow_mut(out, "out") }?;
        let sim = &cfg.0.sim;
        let report = steady_state_run(&sim.eco, &sim.initial_state(), years, sim.dt).map_err(fail)?;
        *out = SchistoSteadyState {
            final_prevalence: report.final_prevalence,
            final_year_drift: report.final_year_drift,
            steady: report.steady,
            clamps: report.clamps,
        };
        Ok(())
    })
}
