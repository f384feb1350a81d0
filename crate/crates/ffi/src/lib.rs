//! C ABI over `graphkm`.
//!
//! Datasets and clustering results are opaque handles created and freed
//! by this library. Every fallible function returns a [`GkmStatus`]; on
//! failure [`gkm_last_error_message`] describes the error on the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graphkm::clustering::{best_of_runs, Algorithm, ClusterConfig, ClusteringResult};
use graphkm::io::{load_dataset, parse_dataset, Dataset, Transform};
use graphkm::{DistanceOracle, Error, Matcher};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    ScaleGuard = 5,
    Io = 6,
    OutOfRange = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkmAlgorithm {
    Std = 0,
    Elkan = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkmMatcher {
    /// Exact up to `exact_max_order`, graduated assignment above.
    Auto = 0,
    Exact = 1,
    GraduatedAssignment = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GkmClusterOptions {
    pub k: usize,
    pub algorithm: GkmAlgorithm,
    pub matcher: GkmMatcher,
    pub exact_max_order: usize,
    pub seed: u64,
    pub runs: usize,
    pub max_iters: usize,
    pub no_improve_limit: usize,
}

/// Loaded dataset.
pub struct GkmDataset {
    inner: Dataset,
}

/// Best clustering run.
pub struct GkmResult {
    inner: ClusteringResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GkmStatus {
    match e {
        Error::Config(_) | Error::UnknownId(_) | Error::LabelsRequired | Error::EmptySample => {
            GkmStatus::Config
        }
        Error::Parse { .. } | Error::Schema(_) | Error::EmptyDataset | Error::Json(_) => {
            GkmStatus::Parse
        }
        Error::ScaleGuard { .. } | Error::OracleScale(_) => GkmStatus::ScaleGuard,
        Error::Io(_) => GkmStatus::Io,
        _ => GkmStatus::Other,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (GkmStatus, String)>) -> GkmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GkmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GkmStatus::Panic
        }
    }
}

fn lib(e: Error) -> (GkmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (GkmStatus, String) {
    (GkmStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (GkmStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GkmStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

fn matcher_for(
    kind: GkmMatcher,
    max_order: usize,
    limit: usize,
) -> Result<Matcher, (GkmStatus, String)> {
    Ok(match kind {
        GkmMatcher::Auto => Matcher::auto(max_order, limit),
        GkmMatcher::GraduatedAssignment => Matcher::graduated_assignment(),
        GkmMatcher::Exact if max_order > limit => {
            return Err(lib(Error::ScaleGuard {
                order: max_order,
                limit,
            }))
        }
        GkmMatcher::Exact => Matcher::auto(max_order, limit),
    })
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gkm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gkm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gkm_dataset_load(
    path: *const c_char,
    out: *mut *mut GkmDataset,
) -> GkmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let inner = load_dataset(path, &Transform::all()).map_err(lib)?;
        *out = Box::into_raw(Box::new(GkmDataset { inner }));
        Ok(())
    })
}

/// Parses a dataset held in memory.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gkm_dataset_parse(
    text: *const c_char,
    out: *mut *mut GkmDataset,
) -> GkmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let inner = parse_dataset(text.as_bytes(), &Transform::all()).map_err(lib)?;
        *out = Box::into_raw(Box::new(GkmDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from this library and not be freed yet; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn gkm_dataset_free(dataset: *mut GkmDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of graphs, or 0 for null.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_dataset_len(dataset: *const GkmDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.graphs.len())
}

/// Largest graph order, or 0 for null.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_dataset_max_order(dataset: *const GkmDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.max_order())
}

/// Graph distance between graphs `i` and `j`, padded to the dataset's
/// largest order.
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gkm_distance(
    dataset: *const GkmDataset,
    i: usize,
    j: usize,
    matcher: GkmMatcher,
    exact_max_order: usize,
    out: *mut f64,
) -> GkmStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = d.graphs.len();
        if i >= n || j >= n {
            return Err((
                GkmStatus::OutOfRange,
                format!("index out of range for {n} graphs"),
            ));
        }
        let m = matcher_for(matcher, d.max_order(), exact_max_order)?;
        let oracle = DistanceOracle::new(m).with_padding(d.max_order());
        *out = oracle.distance(&d.graphs[i], &d.graphs[j]).map_err(lib)?;
        Ok(())
    })
}

/// Defaults: elkan, automatic matcher with exact limit 10, seed 0, one
/// run, 100 iterations, stop after 3 without improvement.
#[no_mangle]
pub extern "C" fn gkm_cluster_options_default(k: usize) -> GkmClusterOptions {
    GkmClusterOptions {
        k,
        algorithm: GkmAlgorithm::Elkan,
        matcher: GkmMatcher::Auto,
        exact_max_order: 10,
        seed: 0,
        runs: 1,
        max_iters: 100,
        no_improve_limit: 3,
    }
}

/// Clusters the dataset and stores the best of `runs` runs in `out`.
///
/// # Safety
/// `dataset` and `options` must be valid, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gkm_cluster(
    dataset: *const GkmDataset,
    options: *const GkmClusterOptions,
    out: *mut *mut GkmResult,
) -> GkmStatus {
    guard(|| {
        let d = &dataset.as_ref().ok_or_else(|| null("dataset"))?.inner;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let algorithm = match o.algorithm {
            GkmAlgorithm::Std => Algorithm::Std,
            GkmAlgorithm::Elkan => Algorithm::Elkan,
        };
        let mut config = ClusterConfig::new(o.k, algorithm).with_seed(o.seed);
        config.max_iters = o.max_iters;
        config.no_improve_limit = o.no_improve_limit;
        let m = matcher_for(o.matcher, d.max_order(), o.exact_max_order)?;
        let oracle = DistanceOracle::new(m).with_padding(d.max_order());
        let (best, _, _) = best_of_runs(&d.graphs, &config, &oracle, o.runs).map_err(lib)?;
        *out = Box::into_raw(Box::new(GkmResult { inner: best }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and not be freed yet; null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_free(result: *mut GkmResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of clustered patterns, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_len(result: *const GkmResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.membership.len())
}

/// Number of clusters, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_k(result: *const GkmResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.k())
}

/// Objective of the best state, NaN for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_objective(result: *const GkmResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.inner.objective)
}

/// Iterations executed, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_iterations(result: *const GkmResult) -> usize {
    result.as_ref().map_or(0, |r| r.inner.iterations)
}

/// Total graph distance computations, or 0 for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_matchings(result: *const GkmResult) -> u64 {
    result.as_ref().map_or(0, |r| r.inner.matchings.total())
}

/// Copies the cluster index of every pattern into `buf`, which must hold
/// at least [`gkm_result_len`] entries.
///
/// # Safety
/// `result` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gkm_result_assignment(
    result: *const GkmResult,
    buf: *mut usize,
    len: usize,
) -> GkmStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null("result"))?.inner;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let a = r.membership.assignment();
        if len < a.len() {
            return Err((
                GkmStatus::OutOfRange,
                format!("buffer holds {len} entries, {} needed", a.len()),
            ));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), buf, a.len());
        Ok(())
    })
}
