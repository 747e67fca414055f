//! C interface to `deflatecrb`.
//!
//! Conventions:
//!
//! * every function returns a [`DcrbStatus`]; results go through out-pointers;
//! * on failure, [`dcrb_last_error`] returns a message for the calling thread;
//! * matrices are column-major `double` arrays with an explicit row count;
//! * handles are opaque and must be released with their `*_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use deflatecrb::bounds::{self, BoundReport};
use deflatecrb::config::ScenarioConfig;
use deflatecrb::harness::{
    self, EstimatorKind, ExperimentResult, ExportFormat, FigureOptions, ResultRow, Scenario,
};
use deflatecrb::model::ProblemDims;
use deflatecrb::rmt::{self, FSource, MPLaw};
use deflatecrb::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcrbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDims = 3,
    DimensionMismatch = 4,
    RankDeficient = 5,
    IllConditioned = 6,
    NonFinite = 7,
    Regime = 8,
    InsideSupport = 9,
    TooManyFailures = 10,
    Config = 11,
    Io = 12,
    Serialize = 13,
    OutOfRange = 14,
    Panic = 15,
}

impl From<&Error> for DcrbStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidDims(_) => DcrbStatus::InvalidDims,
            Error::InvalidArgument(_) => DcrbStatus::InvalidArgument,
            Error::DimensionMismatch(_) => DcrbStatus::DimensionMismatch,
            Error::RankDeficient { .. } => DcrbStatus::RankDeficient,
            Error::IllConditioned { .. } => DcrbStatus::IllConditioned,
            Error::NonFinite(_) => DcrbStatus::NonFinite,
            Error::Regime(_) => DcrbStatus::Regime,
            Error::InsideSupport { .. } => DcrbStatus::InsideSupport,
            Error::TooManyFailures { .. } => DcrbStatus::TooManyFailures,
            Error::Config(_) => DcrbStatus::Config,
            Error::Io { .. } => DcrbStatus::Io,
            Error::Serialize { .. } => DcrbStatus::Serialize,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(DcrbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DcrbStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status plus message.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> DcrbStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DcrbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DcrbStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn matrix(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, Fail> {
    if rows * cols == 0 {
        return Ok(DMatrix::zeros(rows, cols));
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(DMatrix::from_column_slice(rows, cols, std::slice::from_raw_parts(data, rows * cols)))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(DcrbStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn dcrb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcrb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------- bounds

/// Deflated bound for `A` (`n x l_a`) and `B` (`n x l_b`).
#[no_mangle]
pub unsafe extern "C" fn dcrb_ecrb_deflated(
    a: *const f64,
    b: *const f64,
    n: usize,
    l_a: usize,
    l_b: usize,
    sigma2: f64,
    out: *mut f64,
) -> DcrbStatus {
    guard(|| {
        let v = bounds::ecrb_deflated(&matrix(a, n, l_a, "a")?, &matrix(b, n, l_b, "b")?, sigma2)?;
        write_out(out, v)
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_ecrb_joint(
    a: *const f64,
    b: *const f64,
    n: usize,
    l_a: usize,
    l_b: usize,
    sigma0_2: f64,
    out: *mut f64,
) -> DcrbStatus {
    guard(|| {
        let v = bounds::ecrb_joint(&matrix(a, n, l_a, "a")?, &matrix(b, n, l_b, "b")?, sigma0_2)?;
        write_out(out, v)
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_ecrb_ideal(
    a: *const f64,
    n: usize,
    l_a: usize,
    sigma1_2: f64,
    out: *mut f64,
) -> DcrbStatus {
    guard(|| {
        let v = bounds::ecrb_ideal(&matrix(a, n, l_a, "a")?, sigma1_2)?;
        write_out(out, v)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DcrbBoundReport {
    pub c_deflated: f64,
    pub c_joint: f64,
    pub c_ideal: f64,
    pub c_deflated_inf: f64,
    pub c_joint_inf: f64,
    pub c_ideal_inf: f64,
    pub snr_na_deflated: f64,
    pub snr_na_joint: f64,
    pub snr_na_ideal: f64,
    pub sigma2: f64,
    pub sigma0_2: f64,
    pub sigma1_2: f64,
    pub rho: f64,
    pub c: f64,
}

impl From<BoundReport> for DcrbBoundReport {
    fn from(r: BoundReport) -> Self {
        Self {
            c_deflated: r.c_deflated,
            c_joint: r.c_joint,
            c_ideal: r.c_ideal,
            c_deflated_inf: r.c_deflated_inf,
            c_joint_inf: r.c_joint_inf,
            c_ideal_inf: r.c_ideal_inf,
            snr_na_deflated: r.snr_na_deflated,
            snr_na_joint: r.snr_na_joint,
            snr_na_ideal: r.snr_na_ideal,
            sigma2: r.sigma2,
            sigma0_2: r.sigma0_2,
            sigma1_2: r.sigma1_2,
            rho: r.ratios.rho,
            c: r.ratios.c,
        }
    }
}

/// All bounds for one dictionary draw, each model calibrated to `snr_db`.
#[no_mangle]
pub unsafe extern "C" fn dcrb_bound_report(
    a: *const f64,
    b: *const f64,
    n: usize,
    l_a: usize,
    l_b: usize,
    snr_db: f64,
    sigma_alpha2: f64,
    sigma_beta2: f64,
    out: *mut DcrbBoundReport,
) -> DcrbStatus {
    guard(|| {
        let r = BoundReport::compute(
            &matrix(a, n, l_a, "a")?,
            &matrix(b, n, l_b, "b")?,
            snr_db,
            sigma_alpha2,
            sigma_beta2,
        )?;
        write_out(out, r.into())
    })
}

// ---------------------------------------------------------------- random matrices

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DcrbMpSupport {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub zero_mass: f64,
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_mp_support(rho_tilde: f64, out: *mut DcrbMpSupport) -> DcrbStatus {
    guard(|| {
        let law = MPLaw::new(rho_tilde)?;
        write_out(
            out,
            DcrbMpSupport {
                lambda_minus: law.lambda_minus,
                lambda_plus: law.lambda_plus,
                zero_mass: law.zero_mass(),
            },
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_mp_density(rho_tilde: f64, x: f64, out: *mut f64) -> DcrbStatus {
    guard(|| write_out(out, rmt::mp_density(x, &MPLaw::new(rho_tilde)?)))
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_mp_cdf(rho_tilde: f64, x: f64, out: *mut f64) -> DcrbStatus {
    guard(|| write_out(out, rmt::mp_cdf(x, &MPLaw::new(rho_tilde)?)))
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_mp_moment(rho_tilde: f64, k: u32, out: *mut f64) -> DcrbStatus {
    guard(|| write_out(out, rmt::mp_moment(k, &MPLaw::new(rho_tilde)?)))
}

/// Stieltjes transform at `re + i im`.
#[no_mangle]
pub unsafe extern "C" fn dcrb_mp_stieltjes(
    rho_tilde: f64,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> DcrbStatus {
    guard(|| {
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output pointer"));
        }
        let s = rmt::mp_stieltjes(num_complex::Complex64::new(re, im), &MPLaw::new(rho_tilde)?)?;
        write_out(out_re, s.re)?;
        write_out(out_im, s.im)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DcrbLemma1 {
    pub inverse_trace_mean: f64,
    pub inverse_trace_stderr: f64,
    pub inverse_trace_limit: f64,
    pub trace_mean: f64,
    pub trace_stderr: f64,
    pub trace_limit: f64,
}

/// Monte-Carlo check of the trace limits. `iid != 0` draws `F` directly.
#[no_mangle]
pub unsafe extern "C" fn dcrb_lemma1(
    n: usize,
    k: usize,
    l_a: usize,
    l_b: usize,
    trials: usize,
    seed: u64,
    iid: i32,
    out: *mut DcrbLemma1,
) -> DcrbStatus {
    guard(|| {
        let dims = ProblemDims::new(n, k, l_a, l_b)?;
        let source = if iid != 0 { FSource::Iid } else { FSource::Deflated };
        let r = rmt::verify_lemma1(&dims, trials, source, seed)?;
        write_out(
            out,
            DcrbLemma1 {
                inverse_trace_mean: r.inverse_trace.mean,
                inverse_trace_stderr: r.inverse_trace.stderr,
                inverse_trace_limit: r.limit_inverse_trace,
                trace_mean: r.trace.mean,
                trace_stderr: r.trace.stderr,
                trace_limit: r.limit_trace,
            },
        )
    })
}

// ---------------------------------------------------------------- experiments

/// Opaque scenario handle.
pub struct DcrbScenario(Scenario);

/// Opaque experiment result handle.
pub struct DcrbResult {
    result: ExperimentResult,
    names: Vec<CString>,
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

/// Parses a TOML scenario (same format as the command-line tool).
#[no_mangle]
pub unsafe extern "C" fn dcrb_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut DcrbScenario,
) -> DcrbStatus {
    guard(|| {
        let s = ScenarioConfig::parse(c_str(text, "text")?)?.to_scenario()?;
        emit(out, DcrbScenario(s))
    })
}

/// Scenario of a reference figure (2 to 5). Zero `trials` keeps the default count.
#[no_mangle]
pub unsafe extern "C" fn dcrb_scenario_figure(
    id: u32,
    seed: u64,
    trials: usize,
    out: *mut *mut DcrbScenario,
) -> DcrbStatus {
    guard(|| {
        let opts = FigureOptions {
            seed: Some(seed),
            trials: (trials > 0).then_some(trials),
            ..Default::default()
        };
        emit(out, DcrbScenario(harness::figure_scenario(id, &opts)?))
    })
}

/// Restricts a scenario to the SNR values in `snr_db[0..count]`, keeping its dimensions.
#[no_mangle]
pub unsafe extern "C" fn dcrb_scenario_set_snr_grid(
    scenario: *mut DcrbScenario,
    snr_db: *const f64,
    count: usize,
) -> DcrbStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        if count == 0 || snr_db.is_null() {
            return Err(Fail(DcrbStatus::InvalidArgument, "SNR grid is empty".into()));
        }
        let snr = std::slice::from_raw_parts(snr_db, count);
        let mut dims: Vec<ProblemDims> = Vec::new();
        for p in &s.0.grid {
            if !dims.contains(&p.dims) {
                dims.push(p.dims);
            }
        }
        let mut next = s.0.clone();
        next.grid = dims
            .iter()
            .flat_map(|&d| snr.iter().map(move |&snr_db| harness::GridPoint { dims: d, snr_db }))
            .collect();
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_scenario_free(scenario: *mut DcrbScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario on `workers` threads (0 for all processors).
#[no_mangle]
pub unsafe extern "C" fn dcrb_experiment_run(
    scenario: *const DcrbScenario,
    workers: usize,
    out: *mut *mut DcrbResult,
) -> DcrbStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let result = harness::run_experiment_with_workers(&s.0, (workers > 0).then_some(workers))?;
        let names = result
            .rows
            .iter()
            .map(|r| CString::new(r.estimator.clone()).unwrap_or_default())
            .collect();
        emit(out, DcrbResult { result, names })
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DcrbRow {
    pub figure_id: u32,
    pub n: usize,
    pub k: usize,
    pub l_a: usize,
    pub l_b: usize,
    pub snr_db: f64,
    /// Estimator code: 0 omp, 1 cosamp, 2 bpdn, 3 oracle_ls, -1 bound summary.
    pub estimator: i32,
    pub deflated: bool,
    pub mse: f64,
    pub mse_db: f64,
    pub c_deflated: f64,
    pub c_deflated_inf: f64,
    pub c_joint: f64,
    pub c_joint_inf: f64,
    pub c_ideal: f64,
    pub c_ideal_inf: f64,
    pub trials_ok: usize,
    pub stderr: f64,
}

fn estimator_code(name: &str) -> i32 {
    EstimatorKind::ALL
        .iter()
        .position(|e| e.name() == name)
        .map_or(-1, |i| i as i32)
}

impl From<&ResultRow> for DcrbRow {
    fn from(r: &ResultRow) -> Self {
        Self {
            figure_id: r.figure_id,
            n: r.n,
            k: r.k,
            l_a: r.l_a,
            l_b: r.l_b,
            snr_db: r.snr_db,
            estimator: estimator_code(&r.estimator),
            deflated: r.deflated,
            mse: r.mse,
            mse_db: r.mse_db,
            c_deflated: r.c_deflated,
            c_deflated_inf: r.c_deflated_inf,
            c_joint: r.c_joint,
            c_joint_inf: r.c_joint_inf,
            c_ideal: r.c_ideal,
            c_ideal_inf: r.c_ideal_inf,
            trials_ok: r.trials_ok,
            stderr: r.stderr,
        }
    }
}

/// Number of rows in a result; 0 for a NULL handle.
#[no_mangle]
pub unsafe extern "C" fn dcrb_result_row_count(result: *const DcrbResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.rows.len())
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_result_row(
    result: *const DcrbResult,
    index: usize,
    out: *mut DcrbRow,
) -> DcrbStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let row = r.result.rows.get(index).ok_or_else(|| {
            Fail(
                DcrbStatus::OutOfRange,
                format!("row {index} out of range ({} rows)", r.result.rows.len()),
            )
        })?;
        write_out(out, row.into())
    })
}

/// Row label (estimator or bound name), owned by the result handle; NULL if out of range.
#[no_mangle]
pub unsafe extern "C" fn dcrb_result_row_label(result: *const DcrbResult, index: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.names.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Writes the result to `path`; `format` is "csv" or "json".
#[no_mangle]
pub unsafe extern "C" fn dcrb_result_write(
    result: *const DcrbResult,
    path: *const c_char,
    format: *const c_char,
) -> DcrbStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let format = ExportFormat::parse(c_str(format, "format")?)?;
        harness::export(&r.result, format, Path::new(c_str(path, "path")?))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcrb_result_free(result: *mut DcrbResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
