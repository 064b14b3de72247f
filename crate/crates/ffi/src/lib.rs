//! C ABI over `pkgnet`.
//!
//! Graphs are opaque handles created by `pkgnet_graph_from_*` and released
//! with `pkgnet_graph_free`. Every fallible call returns a `PkgnetStatus`;
//! on failure `pkgnet_last_error` describes the error on the calling thread.
//! Results are written through out-pointers, which are left untouched on
//! failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pkgnet::community::louvain;
use pkgnet::control::{build_graph, parse_packages_index, ResolutionPolicy};
use pkgnet::graph::{read_edge_list, symmetrized_view_with, DependencyGraph, Direction, EdgeKind, NodeScope, ReciprocalWeight};
use pkgnet::install::{modularity_effect, run_replicates_with, ConflictMode};
use pkgnet::null_model::{ensemble, EnsembleStats, Statistic, Tail};
use pkgnet::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgnetStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Malformed input text.
    Parse = 3,
    UnknownNode = 4,
    InvalidArgument = 5,
    /// The analysis could not be carried out on this graph.
    Computation = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgnetEdgeKind {
    Dependency = 0,
    Conflict = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgnetDirection {
    In = 0,
    Out = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PkgnetConflictMode {
    AsDeclared = 0,
    Symmetric = 1,
}

/// Observed statistic against a rewired null ensemble. `z` is meaningful
/// only when `z_defined` is true (the null samples have non-zero spread).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkgnetEnsembleStats {
    pub observed: f64,
    pub null_mean: f64,
    pub null_std: f64,
    pub z: f64,
    pub z_defined: bool,
    /// Share of null samples at least as large as `observed`.
    pub p: f64,
    pub n_samples: usize,
}

impl From<&EnsembleStats> for PkgnetEnsembleStats {
    fn from(s: &EnsembleStats) -> Self {
        debug_assert_eq!(s.tail, Tail::Upper);
        PkgnetEnsembleStats {
            observed: s.observed,
            null_mean: s.null_mean,
            null_std: s.null_std,
            z: s.z.unwrap_or(0.0),
            z_defined: s.z.is_some(),
            p: s.p,
            n_samples: s.n_samples,
        }
    }
}

/// Opaque graph handle.
pub struct PkgnetGraph {
    graph: DependencyGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PkgnetStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::Relation { .. } | Error::SelfLoop { .. } | Error::Config(_) => {
                PkgnetStatus::Parse
            }
            Error::UnknownNode(_) => PkgnetStatus::UnknownNode,
            Error::InvalidArgument(_) => PkgnetStatus::InvalidArgument,
            _ => PkgnetStatus::Computation,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> FfiResult) -> PkgnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PkgnetStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            PkgnetStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PkgnetStatus::NullArgument, format!("{what} is NULL"))
}

unsafe fn graph_ref<'a>(g: *const PkgnetGraph) -> FfiResult<&'a DependencyGraph> {
    // SAFETY: non-null handles come from `pkgnet_graph_from_*` (caller contract)
    unsafe { g.as_ref() }.map(|h| &h.graph).ok_or_else(|| null("graph"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string
    unsafe { CStr::from_ptr(s) }
        .to_str()
        .map_err(|e| Failure(PkgnetStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null out-pointers must be valid for writes (caller contract)
    unsafe { out.write(value) };
    Ok(())
}

fn handle(graph: DependencyGraph) -> *mut PkgnetGraph {
    Box::into_raw(Box::new(PkgnetGraph { graph }))
}

fn conflict_mode(m: PkgnetConflictMode) -> ConflictMode {
    match m {
        PkgnetConflictMode::AsDeclared => ConflictMode::AsDeclared,
        PkgnetConflictMode::Symmetric => ConflictMode::Symmetric,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pkgnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pkgnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a `DEP`/`CON`/`NODE` edge list.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_from_edge_list(text: *const c_char, out: *mut *mut PkgnetGraph) -> PkgnetStatus {
    guard(|| {
        let text = unsafe { str_arg(text, "text")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = read_edge_list(text)?;
        unsafe { write_out(out, handle(graph), "out") }
    })
}

/// Parse a Debian `Packages` index of `len` bytes and resolve it into a
/// graph. `policy_json` is NULL for the default policy, or a JSON object
/// such as `{"alternatives": "all_alternatives", "virtuals": "drop"}`.
///
/// # Safety
/// `data` must point to `len` readable bytes, `policy_json` must be NULL or
/// NUL-terminated and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_from_packages(
    data: *const u8,
    len: usize,
    policy_json: *const c_char,
    out: *mut *mut PkgnetGraph,
) -> PkgnetStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let policy: ResolutionPolicy = if policy_json.is_null() {
            ResolutionPolicy::default()
        } else {
            let text = unsafe { str_arg(policy_json, "policy_json")? };
            serde_json::from_str(text)
                .map_err(|e| Failure(PkgnetStatus::InvalidArgument, format!("policy_json: {e}")))?
        };
        // SAFETY: caller guarantees `len` readable bytes at `data`
        let bytes = unsafe { std::slice::from_raw_parts(data, len) };
        let index = parse_packages_index(bytes)?;
        let built = build_graph(&index.records, &policy);
        unsafe { write_out(out, handle(built.graph), "out") }
    })
}

/// Release a graph. NULL is ignored.
///
/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_free(graph: *mut PkgnetGraph) {
    if !graph.is_null() {
        // SAFETY: the handle was created by Box::into_raw in `handle`
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Node, dependency-edge and conflict-edge counts. Any out-pointer may be
/// NULL to skip it.
///
/// # Safety
/// `graph` must be a live handle; non-NULL out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_counts(
    graph: *const PkgnetGraph,
    nodes: *mut usize,
    dep_edges: *mut usize,
    con_edges: *mut usize,
) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        for (out, v) in [
            (nodes, g.node_count()),
            (dep_edges, g.dep_edges().len()),
            (con_edges, g.con_edges().len()),
        ] {
            if !out.is_null() {
                unsafe { out.write(v) };
            }
        }
        Ok(())
    })
}

/// Degree of package `name` for one relation and direction.
///
/// # Safety
/// `graph` must be a live handle, `name` NUL-terminated, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_degree(
    graph: *const PkgnetGraph,
    name: *const c_char,
    kind: PkgnetEdgeKind,
    direction: PkgnetDirection,
    out: *mut usize,
) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        let name = unsafe { str_arg(name, "name")? };
        let kind = match kind {
            PkgnetEdgeKind::Dependency => EdgeKind::Dependency,
            PkgnetEdgeKind::Conflict => EdgeKind::Conflict,
        };
        let direction = match direction {
            PkgnetDirection::In => Direction::In,
            PkgnetDirection::Out => Direction::Out,
        };
        let d = g.degree(name, kind, direction)?;
        unsafe { write_out(out, d, "out") }
    })
}

/// Best-of-`restarts` Louvain modularity of the dependency projection over
/// interacting packages.
///
/// # Safety
/// `graph` must be a live handle and `q` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_louvain_q(graph: *const PkgnetGraph, restarts: usize, seed: u64, q: *mut f64) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        let view = symmetrized_view_with(g, ReciprocalWeight::Count, NodeScope::Interacting);
        let p = louvain(&view, restarts, seed)?;
        unsafe { write_out(q, p.q, "q") }
    })
}

/// Mean and sample standard deviation of the installed fraction over
/// `replicates` runs of the installation process.
///
/// # Safety
/// `graph` must be a live handle; `mean` and `std` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_simulate(
    graph: *const PkgnetGraph,
    replicates: usize,
    seed: u64,
    conflicts: PkgnetConflictMode,
    mean: *mut f64,
    std: *mut f64,
) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        if mean.is_null() || std.is_null() {
            return Err(null("mean/std"));
        }
        let run = run_replicates_with(g, replicates, seed, conflict_mode(conflicts))?;
        unsafe {
            mean.write(run.stats.mean);
            std.write(run.stats.std);
        }
        Ok(())
    })
}

/// Louvain modularity against `randomizations` degree-preserving rewirings.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_modularity_significance(
    graph: *const PkgnetGraph,
    randomizations: usize,
    restarts: usize,
    swaps_per_edge: usize,
    seed: u64,
    out: *mut PkgnetEnsembleStats,
) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let stat = Statistic::LouvainQ {
            restarts,
            weighting: ReciprocalWeight::Count,
        };
        let r = ensemble(g, randomizations, stat, swaps_per_edge, seed)?;
        unsafe { write_out(out, (&r.stats).into(), "out") }
    })
}

/// Mean installed fraction against `networks` rewired dependency networks
/// (conflicts kept), `replicates` runs each.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_modularity_effect(
    graph: *const PkgnetGraph,
    networks: usize,
    replicates: usize,
    swaps_per_edge: usize,
    seed: u64,
    conflicts: PkgnetConflictMode,
    out: *mut PkgnetEnsembleStats,
) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let r = modularity_effect(g, networks, replicates, swaps_per_edge, seed, conflict_mode(conflicts))?;
        unsafe { write_out(out, (&r.stats).into(), "out") }
    })
}

/// Graph summary as a JSON object; free the string with `pkgnet_string_free`.
///
/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_graph_summary_json(graph: *const PkgnetGraph, out: *mut *mut c_char) -> PkgnetStatus {
    guard(|| {
        let g = unsafe { graph_ref(graph)? };
        if out.is_null() {
            return Err(null("out"));
        }
        let json = serde_json::to_string(&g.summary()).expect("summary serialises");
        let c = CString::new(json).expect("JSON has no NUL");
        unsafe { write_out(out, c.into_raw(), "out") }
    })
}

/// Free a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from `pkgnet_graph_summary_json` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pkgnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` came from CString::into_raw
        drop(unsafe { CString::from_raw(s) });
    }
}
