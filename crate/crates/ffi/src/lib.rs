//! C ABI for the `intractable` library.
//!
//! Every fallible call returns an [`IntractableStatus`]; on failure the
//! message is available from [`intractable_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use intractable::harness::{run_experiment, ExperimentConfig, RunOptions, RunStatus};
use intractable::models::{
    Enumeration, ErgmModel, ErgmState, ExpFamily, InnerKind, IsingNetModel, ItemResponseMatrix, PottsLattice,
    PottsModel, UndirectedGraph,
};
use intractable::outer::Trace;
use intractable::rng::RngStream;
use intractable::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntractableStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Intractable = 3,
    Io = 4,
    Parse = 5,
    Config = 6,
    Runtime = 7,
    Partial = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntractableInner {
    Gibbs = 0,
    SwendsenWang = 1,
    EdgeToggle = 2,
}

impl From<IntractableInner> for InnerKind {
    fn from(k: IntractableInner) -> Self {
        match k {
            IntractableInner::Gibbs => InnerKind::GibbsSweep,
            IntractableInner::SwendsenWang => InnerKind::SwendsenWang,
            IntractableInner::EdgeToggle => InnerKind::EdgeToggle,
        }
    }
}

enum ModelHandle {
    Potts(PottsModel),
    Ergm(ErgmModel),
    IsingNet(IsingNetModel),
}

/// Opaque model handle.
pub struct IntractableModel {
    inner: ModelHandle,
}

/// Opaque trace handle.
pub struct IntractableTrace {
    trace: Trace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(IntractableStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. }
            | Error::InvalidState(_)
            | Error::InvalidParameter(_)
            | Error::InvalidIndex { .. } => IntractableStatus::InvalidArgument,
            Error::Intractable { .. } | Error::ExactSamplingUnavailable(_) => IntractableStatus::Intractable,
            Error::Io { .. } | Error::TraceIo { .. } => IntractableStatus::Io,
            Error::Parse { .. } => IntractableStatus::Parse,
            Error::Config(_) => IntractableStatus::Config,
            _ => IntractableStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IntractableStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<IntractableStatus, Failure>) -> IntractableStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_last_error(msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic".into());
            IntractableStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(IntractableStatus::InvalidArgument, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn check_len(expected: usize, got: usize, what: &str) -> Result<(), Failure> {
    if expected != got {
        return Err(Failure(
            IntractableStatus::InvalidArgument,
            format!("{what}: expected length {expected}, got {got}"),
        ));
    }
    Ok(())
}

fn state_from_sites<M: ExpFamily>(model: &M, mut state: M::State, sites: &[u8]) -> Result<M::State, Failure> {
    check_len(model.num_sites(), sites.len(), "sites")?;
    for (i, &v) in sites.iter().enumerate() {
        model.set_site(&mut state, i, v)?;
    }
    Ok(state)
}

/// Bind `$m` to the concrete model and `$base` to a default state of its type.
macro_rules! with_model {
    ($h:expr, |$m:ident, $base:ident| $body:expr) => {
        match $h {
            ModelHandle::Potts($m) => {
                let $base = PottsLattice::uniform($m.rows, $m.cols, $m.colors, 1)?;
                $body
            }
            ModelHandle::Ergm($m) => {
                let $base = ErgmState::new(UndirectedGraph::empty($m.nodes()));
                $body
            }
            ModelHandle::IsingNet($m) => {
                let $base = ItemResponseMatrix::zeros($m.n, $m.p);
                $body
            }
        }
    };
}

unsafe fn model_ref<'a>(model: *const IntractableModel) -> Result<&'a ModelHandle, Failure> {
    model.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn emit_model(out: *mut *mut IntractableModel, inner: ModelHandle) -> Result<IntractableStatus, Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(IntractableModel { inner }));
    Ok(IntractableStatus::Ok)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn intractable_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn intractable_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Potts model on a `rows` × `cols` free-boundary lattice with `colors` colors.
#[no_mangle]
pub unsafe extern "C" fn intractable_potts_new(
    rows: usize,
    cols: usize,
    colors: u8,
    out: *mut *mut IntractableModel,
) -> IntractableStatus {
    guard(|| emit_model(out, ModelHandle::Potts(PottsModel::new(rows, cols, colors)?)))
}

/// Edges + GWESP graph model on `nodes` nodes.
#[no_mangle]
pub unsafe extern "C" fn intractable_ergm_new(nodes: usize, out: *mut *mut IntractableModel) -> IntractableStatus {
    guard(|| emit_model(out, ModelHandle::Ergm(ErgmModel::new(nodes)?)))
}

/// Ising network model for `respondents` × `items` binary responses.
#[no_mangle]
pub unsafe extern "C" fn intractable_isingnet_new(
    respondents: usize,
    items: usize,
    out: *mut *mut IntractableModel,
) -> IntractableStatus {
    guard(|| emit_model(out, ModelHandle::IsingNet(IsingNetModel::new(respondents, items)?)))
}

#[no_mangle]
pub unsafe extern "C" fn intractable_model_free(model: *mut IntractableModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Parameter dimension p, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn intractable_model_dim(model: *const IntractableModel) -> usize {
    match model_ref(model) {
        Ok(ModelHandle::Potts(m)) => m.dim(),
        Ok(ModelHandle::Ergm(m)) => m.dim(),
        Ok(ModelHandle::IsingNet(m)) => m.dim(),
        Err(_) => 0,
    }
}

/// Number of sites in a state, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn intractable_model_num_sites(model: *const IntractableModel) -> usize {
    match model_ref(model) {
        Ok(ModelHandle::Potts(m)) => m.num_sites(),
        Ok(ModelHandle::Ergm(m)) => m.num_sites(),
        Ok(ModelHandle::IsingNet(m)) => m.num_sites(),
        Err(_) => 0,
    }
}

/// Sufficient statistics of the state given site by site (Potts cells
/// row-major with colors 1..K, graph dyads (i < j) in lexicographic order
/// as 0/1, responses row-major as 0/1). Writes `out_len` = p values.
#[no_mangle]
pub unsafe extern "C" fn intractable_suffstats(
    model: *const IntractableModel,
    sites: *const u8,
    n_sites: usize,
    out: *mut f64,
    out_len: usize,
) -> IntractableStatus {
    guard(|| {
        let h = model_ref(model)?;
        let sites = slice(sites, n_sites, "sites")?;
        let out = slice_mut(out, out_len, "out")?;
        let s = with_model!(h, |m, base| m.suffstats(&state_from_sites(m, base, sites)?).0);
        check_len(s.len(), out.len(), "out")?;
        out.copy_from_slice(&s);
        Ok(IntractableStatus::Ok)
    })
}

/// Exact log c(θ) by enumeration, refusing state spaces larger than `cap`.
#[no_mangle]
pub unsafe extern "C" fn intractable_log_normalizer(
    model: *const IntractableModel,
    theta: *const f64,
    p: usize,
    cap: u64,
    out: *mut f64,
) -> IntractableStatus {
    guard(|| {
        let h = model_ref(model)?;
        let theta = slice(theta, p, "theta")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = match h {
            ModelHandle::Potts(m) => Enumeration::new(m, cap)?.log_normalizer(theta)?,
            ModelHandle::Ergm(m) => Enumeration::new(m, cap)?.log_normalizer(theta)?,
            ModelHandle::IsingNet(m) => Enumeration::new(m, cap)?.log_normalizer(theta)?,
        };
        *out = v;
        Ok(IntractableStatus::Ok)
    })
}

/// Run `cycles` inner cycles at θ on the state in `sites`, in place.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn intractable_simulate(
    model: *const IntractableModel,
    theta: *const f64,
    p: usize,
    inner: IntractableInner,
    cycles: usize,
    seed: u64,
    sites: *mut u8,
    n_sites: usize,
) -> IntractableStatus {
    guard(|| {
        let h = model_ref(model)?;
        let theta = slice(theta, p, "theta")?;
        let sites = slice_mut(sites, n_sites, "sites")?;
        let mut rng = RngStream::new(seed, 0);
        with_model!(h, |m, base| {
            m.check_theta(theta)?;
            let mut state = state_from_sites(m, base, sites)?;
            m.run_cycles(inner.into(), cycles, &mut state, theta, &mut rng)?;
            for (i, s) in sites.iter_mut().enumerate() {
                *s = m.site_value(&state, i);
            }
        });
        Ok(IntractableStatus::Ok)
    })
}

/// Run the experiment described by the TOML file at `config_path`.
/// `out_dir` may be null to use the config's output directory. Returns
/// `Partial` when some grid entries failed.
#[no_mangle]
pub unsafe extern "C" fn intractable_run_experiment(
    config_path: *const c_char,
    out_dir: *const c_char,
) -> IntractableStatus {
    guard(|| {
        let cfg = ExperimentConfig::load(&path_arg(config_path, "config_path")?)?;
        let out = if out_dir.is_null() {
            None
        } else {
            Some(path_arg(out_dir, "out_dir")?)
        };
        let outcome = run_experiment(
            &cfg,
            &RunOptions {
                out,
                ..Default::default()
            },
        )?;
        match outcome.status {
            RunStatus::Complete => Ok(IntractableStatus::Ok),
            RunStatus::Partial => {
                set_last_error("some grid entries failed; see summary.csv".into());
                Ok(IntractableStatus::Partial)
            }
            RunStatus::Failed => Err(Failure(IntractableStatus::Runtime, "every grid entry failed".into())),
        }
    })
}

/// Load a trace CSV (and its metadata sidecar, when present).
#[no_mangle]
pub unsafe extern "C" fn intractable_trace_read(
    path: *const c_char,
    out: *mut *mut IntractableTrace,
) -> IntractableStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let trace = Trace::read(&path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(IntractableTrace { trace }));
        Ok(IntractableStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn intractable_trace_free(trace: *mut IntractableTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of stored rows, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn intractable_trace_len(trace: *const IntractableTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Values per row (excluding the iteration index), or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn intractable_trace_width(trace: *const IntractableTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.width())
}

/// Number of leading θ columns, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn intractable_trace_theta_dim(trace: *const IntractableTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.theta_dim())
}

/// Copy row `index` into `out` (`out_len` must equal the trace width) and
/// its iteration number into `iteration` when non-null.
#[no_mangle]
pub unsafe extern "C" fn intractable_trace_row(
    trace: *const IntractableTrace,
    index: usize,
    iteration: *mut u64,
    out: *mut f64,
    out_len: usize,
) -> IntractableStatus {
    guard(|| {
        let t = &trace.as_ref().ok_or_else(|| null("trace"))?.trace;
        if index >= t.len() {
            return Err(Error::InvalidIndex {
                index,
                limit: t.len(),
            }
            .into());
        }
        let out = slice_mut(out, out_len, "out")?;
        check_len(t.width(), out.len(), "out")?;
        out.copy_from_slice(t.row(index));
        if !iteration.is_null() {
            *iteration = t.iter_index(index) as u64;
        }
        Ok(IntractableStatus::Ok)
    })
}
