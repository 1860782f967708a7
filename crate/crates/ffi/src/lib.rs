//! C ABI over `owk-core`.
//!
//! Every fallible function returns an [`OwkStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`owk_last_error_message`]. Handles are opaque, created by
//! `owk_*_new` and released by the matching `owk_*_free`; freeing NULL is a
//! no-op. Strings returned by the library are released with [`owk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use owk_core::analytic::{embedded_cf, embedded_cf_closed, CfForm, CfModel};
use owk_core::green::{gamma, green_from, green_to, hitting_distribution, hitting_law_window, mu_table, ProbabilityTable, QuadratureSpec};
use owk_core::lattice::{LatticePoint, Orientation, WalkParams};
use owk_core::martin::{averaged_axis_kernel, boundary_triviality_report, martin_kernel_axis, martin_kernel_full, DirectionSpec, MartinReport, SweepMode};
use owk_core::simulate::{simulate_endpoints, Endpoint, McBudget};
use owk_core::verify::{run_suite, Suite, VerifyOptions};
use owk_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Structural = 3,
    Numeric = 4,
    Diagnostic = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Characteristic-function form of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwkForm {
    /// `Re g(r)`, the form the simple walk follows.
    Excursion = 0,
    /// `Re[g(r)/r]`.
    Reciprocal = 1,
}

/// A CF model together with its quadrature settings.
pub struct OwkModel {
    model: CfModel,
    spec: QuadratureSpec,
}

/// A law on the integers: `len` atoms plus the mass left outside them.
pub struct OwkTable(ProbabilityTable);

/// Excursion endpoints from `owk_simulate_new`.
pub struct OwkEpisodes(Vec<Endpoint>);

pub struct OwkMartinReport(MartinReport);

/// One simulated excursion.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OwkEpisode {
    pub tau1: u64,
    pub x_sigma1: i64,
    pub truncated: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OwkStatus {
    match e {
        Error::Validation(_) => OwkStatus::InvalidInput,
        Error::Structural { .. } => OwkStatus::Structural,
        Error::Numeric { .. } => OwkStatus::Numeric,
        Error::Diagnostic(_) => OwkStatus::Diagnostic,
    }
}

struct Null;

enum Fail {
    Null,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

impl From<Null> for Fail {
    fn from(_: Null) -> Self {
        Fail::Null
    }
}

/// Runs `f` behind a panic guard and turns its outcome into a status code.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> OwkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OwkStatus::Ok
        }
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            OwkStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            OwkStatus::Internal
        }
    }
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(v);
    Ok(())
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, Null> {
    p.as_ref().ok_or(Null)
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail::Core(Error::validation("string is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

fn point(v1: i64, v2: i64) -> LatticePoint {
    LatticePoint::new(v1, v2)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn owk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length, or 0 if there is none.
///
/// # Safety
/// `buf` must be NULL or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn owk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn owk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `Re[g(r)/r]` evaluated from the series and from its closed form.
///
/// # Safety
/// The out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn owk_embedded_cf(t: f64, p: f64, series: *mut f64, closed: *mut f64) -> OwkStatus {
    guard(|| {
        let a = embedded_cf(t, p)?;
        let b = embedded_cf_closed(t, p)?;
        put(series, a)?;
        put(closed, b)
    })
}

/// New model with the default quadrature settings. `abs_tol <= 0` keeps the
/// default absolute tolerance.
///
/// # Safety
/// `out` must be valid; the handle is released with [`owk_model_free`].
#[no_mangle]
pub unsafe extern "C" fn owk_model_new(p: f64, form: OwkForm, abs_tol: f64, out: *mut *mut OwkModel) -> OwkStatus {
    guard(|| {
        let form = match form {
            OwkForm::Excursion => CfForm::Excursion,
            OwkForm::Reciprocal => CfForm::Reciprocal,
        };
        let model = CfModel::new(p, form)?;
        let mut spec = QuadratureSpec::default();
        if abs_tol > 0.0 {
            spec.abs_tol = abs_tol;
        }
        spec.validate()?;
        put(out, Box::into_raw(Box::new(OwkModel { model, spec })))
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`owk_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn owk_model_free(m: *mut OwkModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `γ(x)`, the embedded-chain Green function from 0 to x, times π.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_gamma(m: *const OwkModel, x: i64, out: *mut f64) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, gamma(x, &m.model, &m.spec)?)
    })
}

/// Expected visits to the axis point `(z, 0)` starting from `(y1, y2)`.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_green_from(m: *const OwkModel, y1: i64, y2: i64, z: i64, out: *mut f64) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, green_from(point(y1, y2), z, &m.model, &m.spec)?)
    })
}

/// Expected visits to `(y1, y2)` starting from the axis point `(z, 0)`.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_green_to(m: *const OwkModel, z: i64, y1: i64, y2: i64, out: *mut f64) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, green_to(z, point(y1, y2), &m.model, &m.spec)?)
    })
}

/// Martin kernel `K((z, 0), y)` normalized at the origin.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_martin_kernel_axis(m: *const OwkModel, z: i64, y1: i64, y2: i64, out: *mut f64) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, martin_kernel_axis(z, point(y1, y2), &m.model, &m.spec)?)
    })
}

/// `Σ_z ν_x(z) K((z, 0), y)`.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_averaged_axis_kernel(
    m: *const OwkModel,
    x1: i64,
    x2: i64,
    y1: i64,
    y2: i64,
    out: *mut f64,
) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, averaged_axis_kernel(point(x1, x2), point(y1, y2), &m.model, &m.spec)?)
    })
}

/// Full Martin kernel `K(x, y)`; the first term is estimated with `n_walks`
/// simulated walks. `error` may be NULL.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_martin_kernel_full(
    m: *const OwkModel,
    x1: i64,
    x2: i64,
    y1: i64,
    y2: i64,
    n_walks: u64,
    horizon: u64,
    seed: u64,
    out: *mut f64,
    error: *mut f64,
) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        let k = martin_kernel_full(point(x1, x2), point(y1, y2), &m.model, &m.spec, McBudget::new(n_walks, horizon, seed))?;
        put(out, k.value)?;
        if !error.is_null() {
            error.write(k.error);
        }
        Ok(())
    })
}

/// Law of the first axis point reached from `(y1, y2)`. With `window > 0` the
/// law is computed on that many sites; otherwise the window grows until the
/// mass outside it is below `tail_tol`.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_hitting_law_new(
    m: *const OwkModel,
    y1: i64,
    y2: i64,
    tail_tol: f64,
    window: usize,
    out: *mut *mut OwkTable,
) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        let y = point(y1, y2);
        let t = if window > 0 {
            hitting_law_window(y, &m.model, window)?
        } else {
            hitting_distribution(y, &m.model, tail_tol)?
        };
        put(out, Box::into_raw(Box::new(OwkTable(t))))
    })
}

/// Law of the height at which column `y1` is first reached from `(x1, x2)`,
/// for heights `1..=u_max`.
///
/// # Safety
/// `m` must be a live model handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_column_law_new(
    m: *const OwkModel,
    x1: i64,
    x2: i64,
    y1: i64,
    u_max: i64,
    out: *mut *mut OwkTable,
) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        put(out, Box::into_raw(Box::new(OwkTable(mu_table(point(x1, x2), y1, u_max, &m.spec)?))))
    })
}

/// # Safety
/// `t` must be a live table handle or NULL (then 0 is returned).
#[no_mangle]
pub unsafe extern "C" fn owk_table_len(t: *const OwkTable) -> usize {
    t.as_ref().map_or(0, |t| t.0.support.len())
}

/// # Safety
/// `t` must be a live table handle and the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn owk_table_get(t: *const OwkTable, index: usize, site: *mut i64, mass: *mut f64) -> OwkStatus {
    guard(|| {
        let t = &get(t)?.0;
        if index >= t.support.len() {
            return Err(Error::validation(format!("index {index} out of range 0..{}", t.support.len())).into());
        }
        put(site, t.support[index])?;
        put(mass, t.masses[index])
    })
}

/// Mass not represented by the table's atoms.
///
/// # Safety
/// `t` must be a live table handle or NULL (then NaN is returned).
#[no_mangle]
pub unsafe extern "C" fn owk_table_tail_bound(t: *const OwkTable) -> f64 {
    t.as_ref().map_or(f64::NAN, |t| t.0.tail_bound)
}

/// # Safety
/// `t` must be NULL or a table handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn owk_table_free(t: *mut OwkTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Simulates `n_walks` walks on the half-plane lattice from `(y1, y2)` until
/// they reach the axis or `horizon` steps pass.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn owk_simulate_new(
    y1: i64,
    y2: i64,
    n_walks: u64,
    horizon: u64,
    seed: u64,
    out: *mut *mut OwkEpisodes,
) -> OwkStatus {
    guard(|| {
        let e = simulate_endpoints(
            point(y1, y2),
            &Orientation::half_plane(),
            &WalkParams::simple(),
            McBudget::new(n_walks, horizon, seed),
        )?;
        put(out, Box::into_raw(Box::new(OwkEpisodes(e))))
    })
}

/// # Safety
/// `e` must be a live handle or NULL (then 0 is returned).
#[no_mangle]
pub unsafe extern "C" fn owk_episodes_len(e: *const OwkEpisodes) -> usize {
    e.as_ref().map_or(0, |e| e.0.len())
}

/// # Safety
/// `e` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_episodes_get(e: *const OwkEpisodes, index: usize, out: *mut OwkEpisode) -> OwkStatus {
    guard(|| {
        let e = &get(e)?.0;
        let ep = e
            .get(index)
            .ok_or_else(|| Error::validation(format!("index {index} out of range 0..{}", e.len())))?;
        put(
            out,
            OwkEpisode {
                tau1: ep.tau1,
                x_sigma1: ep.x_sigma1,
                truncated: ep.truncated,
            },
        )
    })
}

/// # Safety
/// `e` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn owk_episodes_free(e: *mut OwkEpisodes) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Full-kernel values from `(x1, x2)` along one sweep: `sweep` is
/// `lambda=<real>`, `horizontal` or `vertical=<y1>`, with `points` norms
/// spaced geometrically in `[norm_min, norm_max]`.
///
/// # Safety
/// `m` must be a live model handle, `sweep` a NUL-terminated string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_martin_report_new(
    m: *const OwkModel,
    x1: i64,
    x2: i64,
    sweep: *const c_char,
    norm_min: f64,
    norm_max: f64,
    points: usize,
    n_walks: u64,
    horizon: u64,
    seed: u64,
    out: *mut *mut OwkMartinReport,
) -> OwkStatus {
    guard(|| {
        let m = get(m)?;
        let mode: SweepMode = text(sweep)?.parse()?;
        let dirs = DirectionSpec::generate(mode, norm_min, norm_max, points)?;
        let r = boundary_triviality_report(point(x1, x2), &[dirs], &m.model, &m.spec, McBudget::new(n_walks, horizon, seed))?;
        put(out, Box::into_raw(Box::new(OwkMartinReport(r))))
    })
}

/// Sup over the last quartile of the sweep of `|K - 1|`; NaN when every
/// tail point failed.
///
/// # Safety
/// `r` must be a live handle or NULL (then NaN is returned).
#[no_mangle]
pub unsafe extern "C" fn owk_martin_report_sup_deviation(r: *const OwkMartinReport) -> f64 {
    r.as_ref().and_then(|r| r.0.sup_deviation).unwrap_or(f64::NAN)
}

/// The report as JSON; release with [`owk_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn owk_martin_report_json(r: *const OwkMartinReport, out: *mut *mut c_char) -> OwkStatus {
    guard(|| {
        let r = get(r)?;
        let s = serde_json::to_string(&r.0).map_err(|e| Error::numeric(e.to_string()))?;
        put(out, into_c_string(s))
    })
}

/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn owk_martin_report_free(r: *mut OwkMartinReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Runs a verification suite (`cf`, `green`, `embedded`, `full`, `poisson` or
/// `all`) with Monte Carlo budgets scaled by `budget_scale`. Writes the JSON
/// report to `json` (release with [`owk_string_free`]) and whether every check
/// passed to `passed`.
///
/// # Safety
/// `suite` must be a NUL-terminated string and the out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn owk_verify(
    suite: *const c_char,
    budget_scale: f64,
    seed: u64,
    json: *mut *mut c_char,
    passed: *mut bool,
) -> OwkStatus {
    guard(|| {
        let suite: Suite = text(suite)?.parse()?;
        if !(budget_scale > 0.0) {
            return Err(Error::validation("budget_scale must be positive").into());
        }
        if json.is_null() || passed.is_null() {
            return Err(Fail::Null);
        }
        let opts = VerifyOptions {
            seed,
            ..VerifyOptions::default()
        }
        .scaled(budget_scale);
        let report = run_suite(suite, &opts)?;
        let s = serde_json::to_string(&report).map_err(|e| Error::numeric(e.to_string()))?;
        put(passed, report.pass)?;
        put(json, into_c_string(s))
    })
}
