//! C ABI over the graph-unlearn toolkit.
//!
//! Datasets and unlearning engines are opaque heap handles released with
//! their `_free` function. Every fallible call returns a [`GuStatus`]; the
//! message of the last failure on the calling thread is available through
//! [`gu_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use graph_unlearn::classifier::LossKind;
use graph_unlearn::graph::{load_dataset, Dataset, DatasetFormat, Split};
use graph_unlearn::scattering::{embed, ScatteringConfig};
use graph_unlearn::synthetic::{generate, SyntheticConfig};
use graph_unlearn::unlearn::{
    calibrate_noise, worst_case_bound, Action, BudgetLedger, GuardPolicy, RemovalRequest, UnlearnConfig, Unlearner,
    WorstCaseKind, WorstCaseParams,
};
use graph_unlearn::wavelets::{FamilyKind, WaveletFamily};
use graph_unlearn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Structure = 4,
    NodeOutOfRange = 5,
    DegenerateGraph = 6,
    Label = 7,
    Shape = 8,
    Numerical = 9,
    NotConverged = 10,
    StaleRequest = 11,
    RequestMismatch = 12,
    BatchTooLarge = 13,
    DominanceViolation = 14,
    Io = 15,
    Serde = 16,
    Unsupported = 17,
    Cache = 18,
    BufferTooSmall = 19,
    Panic = 20,
}

impl From<&Error> for GuStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => GuStatus::Parse,
            Error::Structure(_) => GuStatus::Structure,
            Error::NodeOutOfRange { .. } => GuStatus::NodeOutOfRange,
            Error::DegenerateGraph(_) => GuStatus::DegenerateGraph,
            Error::Parameter(_) => GuStatus::InvalidArgument,
            Error::Label(_) => GuStatus::Label,
            Error::Shape(_) => GuStatus::Shape,
            Error::Cache(_) => GuStatus::Cache,
            Error::Unsupported(_) => GuStatus::Unsupported,
            Error::Numerical(_) => GuStatus::Numerical,
            Error::NotConverged { .. } => GuStatus::NotConverged,
            Error::StaleRequest(_) => GuStatus::StaleRequest,
            Error::RequestMismatch(_) => GuStatus::RequestMismatch,
            Error::BatchTooLarge { .. } => GuStatus::BatchTooLarge,
            Error::DominanceViolation(_) => GuStatus::DominanceViolation,
            Error::Io { .. } => GuStatus::Io,
            Error::Serde(_) => GuStatus::Serde,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuFamily {
    MonicCubic = 0,
    Itersine = 1,
    Diffusion = 2,
    Geometric = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuLoss {
    Logistic = 0,
    Linear = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuGuard {
    Enforce = 0,
    Disabled = 1,
    AlwaysRetrain = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuRequestKind {
    Feature = 0,
    Node = 1,
    Graph = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuAction {
    NewtonUpdate = 0,
    Retrain = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuWorstCaseKind {
    FeatureSingle = 0,
    NodeSingle = 1,
    FeatureBatch = 2,
    NodeBatch = 3,
}

/// Scattering transform shape: wavelet family, scales J, layers L and
/// moments Q.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GuScatteringParams {
    pub family: GuFamily,
    pub scales: usize,
    pub layers: usize,
    pub moments: usize,
}

/// Engine settings. `frame` <= 0 computes the energy constant from the
/// training graphs' frame bounds.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GuUnlearnParams {
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub loss: GuLoss,
    pub guard: GuGuard,
    pub seed: u64,
    pub frame: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GuOutcome {
    pub action: GuAction,
    pub bound: f64,
    pub beta: f64,
    pub threshold: f64,
    pub retrain_count: usize,
    pub wall_ms: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GuWorstCaseParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    pub n: usize,
    pub g_n: usize,
    pub frame: f64,
    pub m: usize,
}

/// Opaque dataset handle.
pub struct GuDataset(Dataset);

/// Opaque unlearning engine handle.
pub struct GuUnlearner(Unlearner);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: GuStatus, msg: impl Into<String>) -> GuStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), GuStatus>) -> GuStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GuStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(GuStatus::Panic, "internal panic"),
    }
}

fn check(e: Error) -> GuStatus {
    let s = GuStatus::from(&e);
    fail(s, e.to_string())
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), GuStatus> {
    if p.is_null() {
        Err(fail(GuStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn scattering_config(p: &GuScatteringParams) -> Result<ScatteringConfig, GuStatus> {
    let kind = match p.family {
        GuFamily::MonicCubic => FamilyKind::MonicCubic,
        GuFamily::Itersine => FamilyKind::Itersine,
        GuFamily::Diffusion => FamilyKind::Diffusion,
        GuFamily::Geometric => FamilyKind::Geometric,
    };
    let family = WaveletFamily::new(kind, p.scales, p.moments).map_err(check)?;
    ScatteringConfig::new(family, p.layers).map_err(check)
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length without
/// the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gu_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a dataset directory in the TU edge-list layout.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_load(path: *const c_char, out: *mut *mut GuDataset) -> GuStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(GuStatus::InvalidArgument, "path is not UTF-8"))?;
        let ds = load_dataset(path, DatasetFormat::TuEdgeList).map_err(check)?;
        *out = Box::into_raw(Box::new(GuDataset(ds)));
        Ok(())
    })
}

/// Generates the synthetic two-class dataset.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_synthetic(
    graphs: usize,
    min_nodes: usize,
    max_nodes: usize,
    seed: u64,
    out: *mut *mut GuDataset,
) -> GuStatus {
    guard(|| {
        non_null(out, "out")?;
        let cfg = SyntheticConfig {
            graphs,
            min_nodes,
            max_nodes,
            ..SyntheticConfig::default()
        };
        let ds = generate(&cfg, seed).map_err(check)?;
        *out = Box::into_raw(Box::new(GuDataset(ds)));
        Ok(())
    })
}

/// Number of graphs, 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_len(ds: *const GuDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Node count of graph `index`, 0 when out of range.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_node_count(ds: *const GuDataset, index: usize) -> usize {
    ds.as_ref()
        .and_then(|d| d.0.graphs.get(index))
        .map_or(0, |g| g.node_count())
}

/// Replaces the split with a seeded random one.
///
/// # Safety
/// `ds` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_random_split(
    ds: *mut GuDataset,
    train: f64,
    validation: f64,
    test: f64,
    seed: u64,
) -> GuStatus {
    guard(|| {
        non_null(ds, "dataset")?;
        let d = &mut (*ds).0;
        d.split = Split::random(d.len(), [train, validation, test], seed).map_err(check)?;
        Ok(())
    })
}

/// Writes the scattering coefficients of graph `index` into `out`, which
/// must hold `len >= dimension` values.
///
/// # Safety
/// `ds` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gu_embed_graph(
    ds: *const GuDataset,
    index: usize,
    params: GuScatteringParams,
    out: *mut f64,
    len: usize,
) -> GuStatus {
    guard(|| {
        non_null(ds, "dataset")?;
        non_null(out, "out")?;
        let config = scattering_config(&params)?;
        let ds = &*ds;
        let g =
            ds.0.graphs
                .get(index)
                .ok_or_else(|| fail(GuStatus::InvalidArgument, format!("no graph {index}")))?;
        if len < config.dim() {
            return Err(fail(GuStatus::BufferTooSmall, format!("need {} values", config.dim())));
        }
        let e = embed(g, &config).map_err(check)?;
        ptr::copy_nonoverlapping(e.values.as_ptr(), out, e.values.len());
        Ok(())
    })
}

/// Embedding dimension for `params`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_embedding_dim(params: GuScatteringParams, out: *mut usize) -> GuStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = scattering_config(&params)?.dim();
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn gu_dataset_free(ds: *mut GuDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Embeds the training split of `ds` and trains the initial model. The
/// engine copies what it needs; `ds` may be freed afterwards.
///
/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_new(
    ds: *const GuDataset,
    scattering: GuScatteringParams,
    params: GuUnlearnParams,
    out: *mut *mut GuUnlearner,
) -> GuStatus {
    guard(|| {
        non_null(ds, "dataset")?;
        non_null(out, "out")?;
        let config = UnlearnConfig {
            lambda: params.lambda,
            alpha: params.alpha,
            epsilon: params.epsilon,
            delta: params.delta,
            loss: match params.loss {
                GuLoss::Logistic => LossKind::Logistic,
                GuLoss::Linear => LossKind::Linear,
            },
            guard: match params.guard {
                GuGuard::Enforce => GuardPolicy::Enforce,
                GuGuard::Disabled => GuardPolicy::Disabled,
                GuGuard::AlwaysRetrain => GuardPolicy::AlwaysRetrain,
            },
            diagnostics: false,
            seed: params.seed,
            frame: (params.frame > 0.0).then_some(params.frame),
        };
        let u = Unlearner::new(&(*ds).0, scattering_config(&scattering)?, config).map_err(check)?;
        *out = Box::into_raw(Box::new(GuUnlearner(u)));
        Ok(())
    })
}

/// Serves one removal request. `node` is ignored for whole-graph requests.
///
/// # Safety
/// `u` must be a live handle and `out` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_process(
    u: *mut GuUnlearner,
    kind: GuRequestKind,
    graph: usize,
    node: usize,
    out: *mut GuOutcome,
) -> GuStatus {
    guard(|| {
        non_null(u, "unlearner")?;
        let req = match kind {
            GuRequestKind::Feature => RemovalRequest::feature(graph, node),
            GuRequestKind::Node => RemovalRequest::node(graph, node),
            GuRequestKind::Graph => RemovalRequest::whole_graph(graph),
        };
        let o = (*u).0.process_request(req).map_err(check)?;
        if !out.is_null() {
            *out = GuOutcome {
                action: match o.action {
                    Action::NewtonUpdate => GuAction::NewtonUpdate,
                    Action::Retrain => GuAction::Retrain,
                },
                bound: o.bound_used,
                beta: o.beta,
                threshold: o.threshold,
                retrain_count: o.retrain_count,
                wall_ms: o.wall_time.as_secs_f64() * 1e3,
            };
        }
        Ok(())
    })
}

/// Number of binary models (1 for two classes, K one-vs-all otherwise).
///
/// # Safety
/// `u` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_model_count(u: *const GuUnlearner) -> usize {
    u.as_ref().map_or(0, |u| u.0.classifier().models.len())
}

/// Copies the weights of model `model` into `out` (`len` >= dimension).
///
/// # Safety
/// `u` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_weights(
    u: *const GuUnlearner,
    model: usize,
    out: *mut f64,
    len: usize,
) -> GuStatus {
    guard(|| {
        non_null(u, "unlearner")?;
        non_null(out, "out")?;
        let m = (*u)
            .0
            .classifier()
            .models
            .get(model)
            .ok_or_else(|| fail(GuStatus::InvalidArgument, format!("no model {model}")))?;
        if len < m.weights.len() {
            return Err(fail(
                GuStatus::BufferTooSmall,
                format!("need {} values", m.weights.len()),
            ));
        }
        ptr::copy_nonoverlapping(m.weights.as_ptr(), out, m.weights.len());
        Ok(())
    })
}

/// Predicted class of an embedding of length `len`.
///
/// # Safety
/// `u` must be a live handle, `z` valid for `len` doubles and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_predict(
    u: *const GuUnlearner,
    z: *const f64,
    len: usize,
    out: *mut i64,
) -> GuStatus {
    guard(|| {
        non_null(u, "unlearner")?;
        non_null(z, "embedding")?;
        non_null(out, "out")?;
        let c = (*u).0.classifier();
        let d = c.models[0].weights.len();
        if len != d {
            return Err(fail(
                GuStatus::Shape,
                format!("embedding has {len} values, model expects {d}"),
            ));
        }
        let v = nalgebra::DVector::from_column_slice(std::slice::from_raw_parts(z, len));
        *out = c.predict(&v);
        Ok(())
    })
}

/// # Safety
/// `u` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn gu_unlearner_free(u: *mut GuUnlearner) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Closed-form worst-case residual bound.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_worst_case_bound(kind: GuWorstCaseKind, p: GuWorstCaseParams, out: *mut f64) -> GuStatus {
    guard(|| {
        non_null(out, "out")?;
        let kind = match kind {
            GuWorstCaseKind::FeatureSingle => WorstCaseKind::FeatureSingle,
            GuWorstCaseKind::NodeSingle => WorstCaseKind::NodeSingle,
            GuWorstCaseKind::FeatureBatch => WorstCaseKind::FeatureBatch,
            GuWorstCaseKind::NodeBatch => WorstCaseKind::NodeBatch,
        };
        let params = WorstCaseParams {
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            c1: p.c1,
            c2: p.c2,
            lambda: p.lambda,
            n: p.n,
            g_n: p.g_n,
            frame: p.frame,
            m: p.m,
        };
        *out = worst_case_bound(kind, &params).map_err(check)?;
        Ok(())
    })
}

/// Noise scale `sqrt(2 ln(1.5 / delta)) * per_request / epsilon`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_calibrate_noise(epsilon: f64, delta: f64, per_request: f64, out: *mut f64) -> GuStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = calibrate_noise(epsilon, delta, per_request).map_err(check)?;
        Ok(())
    })
}

/// Retrain threshold of the budget ledger.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gu_budget_threshold(epsilon: f64, delta: f64, alpha: f64, out: *mut f64) -> GuStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = BudgetLedger::threshold_for(epsilon, delta, alpha).map_err(check)?;
        Ok(())
    })
}
