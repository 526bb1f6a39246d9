//! Removal requests, residual bounds, the privacy budget ledger and the
//! sequential unlearning engine.
//!
//! Every request moves the model from dataset `D` to the edited dataset
//! `D'` with one Newton step `w' = w + H^{-1} Delta`, where
//! `Delta = grad L(w, D) - grad L(w, D')` and `H` is the Hessian of
//! `L(., D')` at `w`. The step's gradient residual is bounded by
//! `gamma2 F |Z'| |H^{-1} Delta| |Z' H^{-1} Delta|` and charged to a budget;
//! when the budget overflows the model is retrained with fresh noise.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{derive_seed, loss_grad, loss_hessian, spd_solve, Classifier, LossKind, LossModel};
use crate::error::{Error, Result};
use crate::graph::{Dataset, Graph};
use crate::linalg::{power_iteration_psd, OpCount};
use crate::scattering::{embed_incremental, embed_with_bank, PowerCache, ScatteringConfig};
use crate::wavelets::{build_filter_bank, certified_frame_bounds, energy_constant, FilterBank};

const NORM_TOL: f64 = 1e-6;
const NORM_MAX_ITER: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestKind {
    #[serde(rename = "feature")]
    FeatureZero,
    #[serde(rename = "node")]
    NodeRemoval,
    #[serde(rename = "graph")]
    WholeGraph,
}

impl RequestKind {
    pub fn name(self) -> &'static str {
        match self {
            RequestKind::FeatureZero => "feature",
            RequestKind::NodeRemoval => "node",
            RequestKind::WholeGraph => "graph",
        }
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RequestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feature" => Ok(RequestKind::FeatureZero),
            "node" => Ok(RequestKind::NodeRemoval),
            "graph" => Ok(RequestKind::WholeGraph),
            other => Err(Error::Parameter(format!("unknown request kind {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawRequest {
    kind: RequestKind,
    graph: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node: Option<usize>,
}

/// One deletion request. `graph` is an index into the dataset; `node` is
/// present for feature and node kinds only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRequest", into = "RawRequest")]
pub struct RemovalRequest {
    kind: RequestKind,
    graph: usize,
    node: Option<usize>,
}

impl TryFrom<RawRequest> for RemovalRequest {
    type Error = Error;

    fn try_from(r: RawRequest) -> Result<Self> {
        match (r.kind, r.node) {
            (RequestKind::WholeGraph, None) => Ok(Self::whole_graph(r.graph)),
            (RequestKind::WholeGraph, Some(_)) => Err(Error::RequestMismatch("graph requests take no node".into())),
            (kind, Some(node)) => Ok(RemovalRequest {
                kind,
                graph: r.graph,
                node: Some(node),
            }),
            (kind, None) => Err(Error::RequestMismatch(format!("{kind} requests need a node"))),
        }
    }
}

impl From<RemovalRequest> for RawRequest {
    fn from(r: RemovalRequest) -> Self {
        RawRequest {
            kind: r.kind,
            graph: r.graph,
            node: r.node,
        }
    }
}

impl RemovalRequest {
    pub fn feature(graph: usize, node: usize) -> Self {
        RemovalRequest {
            kind: RequestKind::FeatureZero,
            graph,
            node: Some(node),
        }
    }

    pub fn node(graph: usize, node: usize) -> Self {
        RemovalRequest {
            kind: RequestKind::NodeRemoval,
            graph,
            node: Some(node),
        }
    }

    pub fn whole_graph(graph: usize) -> Self {
        RemovalRequest {
            kind: RequestKind::WholeGraph,
            graph,
            node: None,
        }
    }

    pub fn kind(&self) -> RequestKind {
        self.kind
    }

    pub fn graph(&self) -> usize {
        self.graph
    }

    pub fn node_index(&self) -> Option<usize> {
        self.node
    }
}

/// Parses a JSON-lines request stream; blank lines are skipped.
pub fn parse_requests(text: &str, source: &Path) -> Result<Vec<RemovalRequest>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let req: RemovalRequest = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(req);
    }
    Ok(out)
}

pub fn read_requests(path: impl AsRef<Path>) -> Result<Vec<RemovalRequest>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_requests(&text, path)
}

pub fn write_requests(path: impl AsRef<Path>, requests: &[RemovalRequest]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in requests {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::Serde(e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `grad L(w, D) - grad L(w, D')` for one affected sample. `z_new` is the
/// edited embedding for feature and node kinds and absent for whole-graph
/// removal, where the regularizer loses one `lambda w` term.
pub fn compute_delta(
    w: &DVector<f64>,
    z: &DVector<f64>,
    z_new: Option<&DVector<f64>>,
    y: f64,
    loss: &LossModel,
    lambda: f64,
    kind: RequestKind,
) -> Result<DVector<f64>> {
    if z.len() != w.len() || z_new.is_some_and(|v| v.len() != w.len()) {
        return Err(Error::Shape(format!(
            "embedding and weights differ in length ({})",
            w.len()
        )));
    }
    match (kind, z_new) {
        (RequestKind::WholeGraph, None) => Ok(w * lambda + loss.sample_grad(w, z, y)),
        (RequestKind::WholeGraph, Some(_)) => Err(Error::RequestMismatch(
            "whole-graph removal has no edited embedding".into(),
        )),
        (kind, None) => Err(Error::RequestMismatch(format!(
            "{kind} removal needs the edited embedding"
        ))),
        (_, Some(zn)) => Ok(loss.sample_grad(w, z, y) - loss.sample_grad(w, zn, y)),
    }
}

/// `H^{-1} Delta` with `H` the Hessian of the unperturbed loss on the edited
/// data at the current weights.
pub fn newton_step(
    w: &DVector<f64>,
    z_new: &DMatrix<f64>,
    y_new: &[f64],
    lambda: f64,
    delta: &DVector<f64>,
    loss: &LossModel,
) -> Result<DVector<f64>> {
    let h = loss_hessian(w, z_new, y_new, lambda, loss)?;
    spd_solve(&h, delta)
}

pub fn newton_update(
    w: &DVector<f64>,
    z_new: &DMatrix<f64>,
    y_new: &[f64],
    lambda: f64,
    delta: &DVector<f64>,
    loss: &LossModel,
) -> Result<DVector<f64>> {
    Ok(w + newton_step(w, z_new, y_new, lambda, delta, loss)?)
}

/// `gamma2 F |Z'| |s| |Z' s|` for the Newton step `s`, given the spectral
/// norm `|Z'|`.
pub fn data_dependent_bound(z_norm: f64, z_new: &DMatrix<f64>, step: &DVector<f64>, gamma2: f64, frame: f64) -> f64 {
    if gamma2 == 0.0 {
        return 0.0;
    }
    let s = step.norm();
    if s == 0.0 {
        return 0.0;
    }
    gamma2 * frame * z_norm * s * (z_new * step).norm()
}

/// Maintains `Z^T Z` under row edits and serves `|Z|` by warm-started power
/// iteration.
#[derive(Debug, Clone)]
pub struct SpectralNormCache {
    gram: DMatrix<f64>,
    iterate: DVector<f64>,
    norm: f64,
    stale: bool,
}

impl SpectralNormCache {
    pub fn new(z: &DMatrix<f64>) -> Self {
        SpectralNormCache {
            gram: z.tr_mul(z),
            iterate: DVector::zeros(0),
            norm: 0.0,
            stale: true,
        }
    }

    pub fn replace_row(&mut self, old: &DVector<f64>, new: &DVector<f64>) {
        if old == new {
            return;
        }
        self.gram.ger(-1.0, old, old, 1.0);
        self.gram.ger(1.0, new, new, 1.0);
        self.stale = true;
    }

    pub fn remove_row(&mut self, old: &DVector<f64>) {
        self.gram.ger(-1.0, old, old, 1.0);
        self.stale = true;
    }

    pub fn norm(&mut self) -> f64 {
        if self.stale {
            let top = power_iteration_psd(&self.gram, &mut self.iterate, NORM_TOL, NORM_MAX_ITER);
            self.norm = top.sqrt();
            self.stale = false;
        }
        self.norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorstCaseKind {
    FeatureSingle,
    NodeSingle,
    FeatureBatch,
    NodeBatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    /// Training set size.
    pub n: usize,
    /// Nodes of the edited graph; for batches the smallest graph.
    pub g_n: usize,
    /// Embedding energy constant.
    pub frame: f64,
    /// Number of edits in a batch.
    pub m: usize,
}

/// Closed-form residual bounds that need no access to the data.
pub fn worst_case_bound(kind: WorstCaseKind, p: &WorstCaseParams) -> Result<f64> {
    if p.lambda.is_nan() || p.lambda <= 0.0 || p.n == 0 {
        return Err(Error::Parameter("worst-case bound needs lambda > 0 and n > 0".into()));
    }
    let batch = matches!(kind, WorstCaseKind::FeatureBatch | WorstCaseKind::NodeBatch);
    if batch && p.m >= p.g_n {
        return Err(Error::BatchTooLarge {
            m: p.m,
            min_nodes: p.g_n,
        });
    }
    if p.gamma2 == 0.0 {
        return Ok(0.0);
    }
    let f = p.frame;
    let l2 = p.lambda * p.lambda;
    let n = p.n as f64;
    let scale = if batch { (p.m * p.m) as f64 } else { 1.0 };
    let value = match kind {
        WorstCaseKind::FeatureSingle | WorstCaseKind::FeatureBatch => {
            let lead = p.gamma2 * f.powi(3) / (l2 * n);
            let crude = 4.0 * p.c1 * p.c1;
            let stable = (p.gamma1 * p.c1 * f * f + p.lambda * p.c2 * f).powi(2) / (l2 * p.g_n as f64);
            lead * crude.min(stable)
        }
        WorstCaseKind::NodeSingle | WorstCaseKind::NodeBatch => 4.0 * p.gamma2 * p.c1 * p.c1 * f.powi(3) / (l2 * n),
    };
    Ok(scale * value)
}

/// `sigma = c eps' / eps` with `c = sqrt(2 ln(1.5 / delta))`.
pub fn calibrate_noise(epsilon: f64, delta: f64, per_request: f64) -> Result<f64> {
    if !(epsilon > 0.0 && per_request > 0.0) {
        return Err(Error::Parameter(
            "epsilon and the per-request bound must be positive".into(),
        ));
    }
    Ok(noise_multiplier(delta)? * per_request / epsilon)
}

/// `c = sqrt(2 ln(1.5 / delta))`.
pub fn noise_multiplier(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.5) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1.5), got {delta}")));
    }
    Ok((2.0 * (1.5 / delta).ln()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    NewtonUpdate,
    Retrain,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::NewtonUpdate => "update",
            Action::Retrain => "retrain",
        }
    }
}

/// Running sum of residual bounds since the last retrain, checked against
/// `alpha eps / sqrt(2 ln(1.5 / delta))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    epsilon: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
    threshold: f64,
    retrain_count: usize,
    pub gamma2: f64,
    pub frame: f64,
}

impl BudgetLedger {
    pub fn new(epsilon: f64, delta: f64, alpha: f64, gamma2: f64, frame: f64) -> Result<Self> {
        let threshold = Self::threshold_for(epsilon, delta, alpha)?;
        Ok(BudgetLedger {
            epsilon,
            delta,
            alpha,
            beta: 0.0,
            threshold,
            retrain_count: 0,
            gamma2,
            frame,
        })
    }

    pub fn threshold_for(epsilon: f64, delta: f64, alpha: f64) -> Result<f64> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::Parameter(format!("alpha must be nonnegative, got {alpha}")));
        }
        Ok(alpha * epsilon / noise_multiplier(delta)?)
    }

    pub fn set_budget(&mut self, epsilon: f64, delta: f64, alpha: f64) -> Result<()> {
        if (epsilon, delta, alpha) != (self.epsilon, self.delta, self.alpha) {
            self.threshold = Self::threshold_for(epsilon, delta, alpha)?;
            self.epsilon = epsilon;
            self.delta = delta;
            self.alpha = alpha;
        }
        Ok(())
    }

    /// Adds `bound` and decides; a retrain resets `beta` to zero.
    pub fn charge(&mut self, bound: f64) -> Action {
        self.beta += bound;
        if self.beta > self.threshold {
            self.record_retrain();
            Action::Retrain
        } else {
            Action::NewtonUpdate
        }
    }

    /// Adds `bound` without consulting the threshold.
    pub fn accumulate(&mut self, bound: f64) {
        self.beta += bound;
    }

    pub fn record_retrain(&mut self) {
        self.beta = 0.0;
        self.retrain_count += 1;
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn retrain_count(&self) -> usize {
        self.retrain_count
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlearnOutcome {
    pub step: usize,
    /// Kind shared by every request of the step, `None` for mixed batches.
    pub kind: Option<RequestKind>,
    pub requests: usize,
    pub action: Action,
    /// Data-dependent bound charged to the ledger (max over one-vs-all models).
    pub bound_used: f64,
    pub beta: f64,
    pub threshold: f64,
    pub retrain_count: usize,
    /// `|grad L(w', D')|` of the unperturbed loss; only computed with
    /// diagnostics on and `alpha = 0`.
    pub residual_true: Option<f64>,
    /// `|grad L(w', D') - grad L(w, D)|`, the residual added by this step.
    pub residual_increment: Option<f64>,
    pub worst_case: Option<f64>,
    pub wall_time: Duration,
}

impl UnlearnOutcome {
    pub fn kind_label(&self) -> &'static str {
        self.kind.map_or("mixed", RequestKind::name)
    }
}

/// Writes the outcome log; `test_acc` adds a column when given.
pub fn write_outcomes_csv(path: impl AsRef<Path>, outcomes: &[UnlearnOutcome], test_acc: Option<&[f64]>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    write_outcomes(&mut out, outcomes, test_acc).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_outcomes(out: &mut impl Write, outcomes: &[UnlearnOutcome], test_acc: Option<&[f64]>) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step", "kind", "action", "bound", "beta", "threshold", "wall_ms"];
    if test_acc.is_some() {
        header.push("test_acc");
    }
    w.write_record(&header)?;
    for (i, o) in outcomes.iter().enumerate() {
        let mut rec = vec![
            o.step.to_string(),
            o.kind_label().to_string(),
            o.action.name().to_string(),
            o.bound_used.to_string(),
            o.beta.to_string(),
            o.threshold.to_string(),
            format!("{:.6}", o.wall_time.as_secs_f64() * 1e3),
        ];
        if let Some(acc) = test_acc {
            rec.push(acc.get(i).map_or(String::new(), |a| a.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

/// How the engine reacts to the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuardPolicy {
    /// Retrain when the accumulated bound exceeds the threshold.
    Enforce,
    /// Always apply the Newton step; bounds still accumulate.
    Disabled,
    /// Retrain from scratch after every request (baseline arm).
    AlwaysRetrain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnlearnConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub loss: LossKind,
    pub guard: GuardPolicy,
    /// Evaluate true residuals and worst-case bounds (`alpha = 0` only).
    pub diagnostics: bool,
    pub seed: u64,
    /// Embedding energy constant; computed from certified frame bounds of
    /// the training graphs when absent.
    pub frame: Option<f64>,
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        UnlearnConfig {
            lambda: 1e-4,
            alpha: 0.1,
            epsilon: 1.0,
            delta: 1e-4,
            loss: LossKind::Logistic,
            guard: GuardPolicy::Enforce,
            diagnostics: false,
            seed: 0,
            frame: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    graph: Graph,
    row: usize,
    bank: Option<FilterBank>,
    cache: Option<PowerCache>,
}

struct Edit {
    graph: Graph,
    removed_nodes: Vec<usize>,
    dropped: bool,
    nodes_before: usize,
}

/// Embeddings of the training split (row `r` is `split.train[r]`) and the
/// energy constant from the largest certified upper frame bound among
/// their filter banks. With `with_frame` off the bound is taken as zero,
/// which makes the constant 1.
pub fn training_embeddings(
    dataset: &Dataset,
    scattering: &ScatteringConfig,
    with_frame: bool,
) -> Result<(DMatrix<f64>, f64)> {
    dataset.split.validate(dataset.len())?;
    let train = &dataset.split.train;
    if train.is_empty() {
        return Err(Error::Parameter("empty training split".into()));
    }
    let per_graph: Vec<(DVector<f64>, f64)> = train
        .par_iter()
        .map(|&i| {
            let g = &dataset.graphs[i];
            let bank = build_filter_bank(g, &scattering.family)?;
            let upper = if with_frame {
                certified_frame_bounds(&bank)?.upper
            } else {
                0.0
            };
            let e = embed_with_bank(g.features(), &bank, scattering, &mut OpCount::default())?;
            Ok((e.values, upper))
        })
        .collect::<Result<_>>()?;
    let b = per_graph.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut z = DMatrix::zeros(train.len(), scattering.dim());
    for (r, (v, _)) in per_graph.iter().enumerate() {
        z.row_mut(r).copy_from(&v.transpose());
    }
    Ok((z, energy_constant(b, scattering.layers)))
}

/// Sequential unlearning state machine over the training part of a dataset.
pub struct Unlearner {
    config: UnlearnConfig,
    scattering: ScatteringConfig,
    loss: LossModel,
    slots: Vec<Option<Slot>>,
    /// Dataset index of each row of `z`.
    rows: Vec<usize>,
    labels: Vec<i64>,
    z: DMatrix<f64>,
    model: Classifier,
    ledger: BudgetLedger,
    norm_cache: SpectralNormCache,
    frame: f64,
    steps: usize,
}

impl Unlearner {
    /// Embeds the training graphs, computes the energy constant and trains
    /// the initial model.
    pub fn new(dataset: &Dataset, scattering: ScatteringConfig, config: UnlearnConfig) -> Result<Self> {
        let (z, frame) = training_embeddings(dataset, &scattering, config.frame.is_none())?;
        Self::with_embeddings(dataset, scattering, config, z, config.frame.unwrap_or(frame))
    }

    /// Engine over precomputed training embeddings; row `r` of `z` belongs to
    /// `dataset.graphs[dataset.split.train[r]]`.
    pub fn with_embeddings(
        dataset: &Dataset,
        scattering: ScatteringConfig,
        config: UnlearnConfig,
        z: DMatrix<f64>,
        frame: f64,
    ) -> Result<Self> {
        dataset.split.validate(dataset.len())?;
        let train = &dataset.split.train;
        if train.is_empty() {
            return Err(Error::Parameter("empty training split".into()));
        }
        if z.nrows() != train.len() || z.ncols() != scattering.dim() {
            return Err(Error::Shape(format!(
                "embeddings {}x{} for {} training graphs of dimension {}",
                z.nrows(),
                z.ncols(),
                train.len(),
                scattering.dim()
            )));
        }
        let mut slots = vec![None; dataset.len()];
        for (r, &i) in train.iter().enumerate() {
            slots[i] = Some(Slot {
                graph: dataset.graphs[i].clone(),
                row: r,
                bank: None,
                cache: None,
            });
        }
        let labels: Vec<i64> = train.iter().map(|&i| dataset.graphs[i].label).collect();
        Self::assemble(
            config,
            scattering,
            slots,
            train.clone(),
            labels,
            z,
            dataset.classes(),
            frame,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        config: UnlearnConfig,
        scattering: ScatteringConfig,
        slots: Vec<Option<Slot>>,
        rows: Vec<usize>,
        labels: Vec<i64>,
        z: DMatrix<f64>,
        classes: Vec<i64>,
        frame: f64,
    ) -> Result<Self> {
        let loss = LossModel::from_kind(config.loss);
        let ledger = BudgetLedger::new(config.epsilon, config.delta, config.alpha, loss.gamma2, frame)?;
        let model = Classifier::train(&z, &labels, &classes, config.lambda, config.alpha, config.seed, loss)?;
        let norm_cache = SpectralNormCache::new(&z);
        Ok(Unlearner {
            config,
            scattering,
            loss,
            slots,
            rows,
            labels,
            z,
            model,
            ledger,
            norm_cache,
            frame,
            steps: 0,
        })
    }

    pub fn config(&self) -> &UnlearnConfig {
        &self.config
    }

    pub fn scattering(&self) -> &ScatteringConfig {
        &self.scattering
    }

    pub fn classifier(&self) -> &Classifier {
        &self.model
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut BudgetLedger {
        &mut self.ledger
    }

    /// Training embeddings, one row per remaining training graph.
    pub fn embeddings(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Dataset index of each embedding row.
    pub fn train_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Binary targets of one-vs-all model `k` for the current rows.
    pub fn targets(&self, k: usize) -> Vec<f64> {
        let pos = Classifier::positives(&self.model.classes)[k];
        Classifier::targets(pos, &self.labels)
    }

    /// Current state of a training graph, `None` once removed or when the
    /// index is not a training graph.
    pub fn graph(&self, index: usize) -> Option<&Graph> {
        self.slots.get(index).and_then(|s| s.as_ref()).map(|s| &s.graph)
    }

    /// Energy constant from the frame bounds.
    pub fn frame(&self) -> f64 {
        self.frame
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Unperturbed gradient norm of model `k` on the current data.
    pub fn residual(&self, k: usize) -> Result<f64> {
        let w = &self.model.models[k].weights;
        Ok(loss_grad(w, &self.z, &self.targets(k), None, self.config.lambda, &self.loss)?.norm())
    }

    pub fn process_request(&mut self, request: RemovalRequest) -> Result<UnlearnOutcome> {
        self.process_batch(&[request])
    }

    /// Applies all requests as one edit of the dataset followed by a single
    /// Newton step with the summed `Delta` and a single ledger charge.
    pub fn process_batch(&mut self, requests: &[RemovalRequest]) -> Result<UnlearnOutcome> {
        if requests.is_empty() {
            return Err(Error::Parameter("empty request batch".into()));
        }
        let start = Instant::now();
        let edits = self.plan(requests)?;

        // new embeddings, touching caches only after planning succeeded
        let mut new_rows: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
        let mut new_banks: BTreeMap<usize, (FilterBank, Option<PowerCache>)> = BTreeMap::new();
        for (&gi, edit) in &edits {
            if edit.dropped {
                continue;
            }
            let (values, bank, cache) = self.reembed(gi, edit)?;
            new_rows.insert(gi, values);
            new_banks.insert(gi, (bank, cache));
        }

        // edited data
        let mut norm_cache = self.norm_cache.clone();
        let mut z_new = self.z.clone();
        let mut dropped_rows = Vec::new();
        for (&gi, edit) in &edits {
            let r = self.slot(gi)?.row;
            let old = self.z.row(r).transpose();
            if edit.dropped {
                norm_cache.remove_row(&old);
                dropped_rows.push(r);
            } else {
                let v = &new_rows[&gi];
                norm_cache.replace_row(&old, v);
                z_new.row_mut(r).copy_from(&v.transpose());
            }
        }
        dropped_rows.sort_unstable();
        let keep: Vec<usize> = (0..self.z.nrows())
            .filter(|r| dropped_rows.binary_search(r).is_err())
            .collect();
        let z_new = if dropped_rows.is_empty() {
            z_new
        } else {
            z_new.select_rows(&keep)
        };
        let labels_new: Vec<i64> = keep.iter().map(|&r| self.labels[r]).collect();
        if z_new.nrows() == 0 {
            return Err(Error::Parameter("request would remove every training graph".into()));
        }
        let z_norm = norm_cache.norm();
        let row_max = z_new.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        let frame_eff = self.frame.max(row_max);

        // one Newton step per one-vs-all model
        let lambda = self.config.lambda;
        let positives = Classifier::positives(&self.model.classes);
        let mut steps = Vec::with_capacity(positives.len());
        let mut bound: f64 = 0.0;
        for (k, &pos) in positives.iter().enumerate() {
            let w = &self.model.models[k].weights;
            let mut delta = DVector::zeros(w.len());
            for (&gi, edit) in &edits {
                let r = self.slot(gi)?.row;
                let y = if self.labels[r] == pos { 1.0 } else { -1.0 };
                let old = self.z.row(r).transpose();
                delta += if edit.dropped {
                    compute_delta(w, &old, None, y, &self.loss, lambda, RequestKind::WholeGraph)?
                } else {
                    compute_delta(
                        w,
                        &old,
                        Some(&new_rows[&gi]),
                        y,
                        &self.loss,
                        lambda,
                        RequestKind::FeatureZero,
                    )?
                };
            }
            let y_new = Classifier::targets(pos, &labels_new);
            let s = newton_step(w, &z_new, &y_new, lambda, &delta, &self.loss)?;
            bound = bound.max(data_dependent_bound(z_norm, &z_new, &s, self.loss.gamma2, frame_eff));
            steps.push(s);
        }

        let action = match self.config.guard {
            GuardPolicy::Enforce => self.ledger.charge(bound),
            GuardPolicy::Disabled => {
                self.ledger.accumulate(bound);
                Action::NewtonUpdate
            }
            GuardPolicy::AlwaysRetrain => {
                self.ledger.record_retrain();
                Action::Retrain
            }
        };
        let old_weights: Vec<DVector<f64>> = self.model.models.iter().map(|m| m.weights.clone()).collect();
        match action {
            Action::NewtonUpdate => {
                for (m, s) in self.model.models.iter_mut().zip(&steps) {
                    m.weights += s;
                }
            }
            Action::Retrain => {
                let seed = derive_seed(self.config.seed, self.ledger.retrain_count() as u64);
                self.model = Classifier::train(
                    &z_new,
                    &labels_new,
                    &self.model.classes,
                    lambda,
                    self.config.alpha,
                    seed,
                    self.loss,
                )?;
            }
        }

        // commit
        let old_z = std::mem::replace(&mut self.z, z_new);
        let old_labels = std::mem::replace(&mut self.labels, labels_new);
        self.norm_cache = norm_cache;
        for (gi, edit) in edits.iter() {
            if edit.dropped {
                self.slots[*gi] = None;
            } else if let Some(slot) = self.slots[*gi].as_mut() {
                slot.graph = edit.graph.clone();
                if let Some((bank, cache)) = new_banks.remove(gi) {
                    slot.bank = Some(bank);
                    if cache.is_some() {
                        slot.cache = cache;
                    }
                }
            }
        }
        self.rows = keep.iter().map(|&r| self.rows[r]).collect();
        for (r, &gi) in self.rows.iter().enumerate() {
            if let Some(slot) = self.slots[gi].as_mut() {
                slot.row = r;
            }
        }
        self.steps += 1;
        let wall_time = start.elapsed();

        let kinds: Vec<RequestKind> = requests.iter().map(|r| r.kind).collect();
        let kind = if kinds.iter().all(|k| *k == kinds[0]) {
            Some(kinds[0])
        } else {
            None
        };
        let mut outcome = UnlearnOutcome {
            step: self.steps,
            kind,
            requests: requests.len(),
            action,
            bound_used: bound,
            beta: self.ledger.beta(),
            threshold: self.ledger.threshold(),
            retrain_count: self.ledger.retrain_count(),
            residual_true: None,
            residual_increment: None,
            worst_case: None,
            wall_time,
        };
        if self.config.diagnostics && self.config.alpha == 0.0 {
            self.diagnose(&mut outcome, &edits, &old_z, &old_labels, &old_weights, frame_eff)?;
        }
        Ok(outcome)
    }

    fn slot(&self, index: usize) -> Result<&Slot> {
        match self.slots.get(index) {
            None => Err(Error::RequestMismatch(format!(
                "graph {index} is not in the dataset of {} graphs",
                self.slots.len()
            ))),
            Some(None) => Err(Error::StaleRequest(format!(
                "graph {index} is not (or no longer) in the training set"
            ))),
            Some(Some(s)) => Ok(s),
        }
    }

    fn plan(&self, requests: &[RemovalRequest]) -> Result<BTreeMap<usize, Edit>> {
        let mut edits: BTreeMap<usize, Edit> = BTreeMap::new();
        for req in requests {
            let slot = self.slot(req.graph)?;
            let edit = edits.entry(req.graph).or_insert_with(|| Edit {
                graph: slot.graph.clone(),
                removed_nodes: Vec::new(),
                dropped: false,
                nodes_before: slot.graph.active_count(),
            });
            if edit.dropped {
                return Err(Error::StaleRequest(format!(
                    "graph {} removed earlier in the batch",
                    req.graph
                )));
            }
            match (req.kind, req.node) {
                (RequestKind::WholeGraph, _) => edit.dropped = true,
                (kind, Some(node)) => {
                    let g = edit.graph.node_count();
                    if node >= g {
                        return Err(Error::NodeOutOfRange { index: node, nodes: g });
                    }
                    if !edit.graph.is_active(node) {
                        return Err(Error::StaleRequest(format!(
                            "node {node} of graph {} already removed",
                            req.graph
                        )));
                    }
                    if kind == RequestKind::FeatureZero {
                        edit.graph = edit.graph.zero_feature(node)?;
                    } else {
                        edit.graph = edit.graph.mask_node(node)?;
                        edit.removed_nodes.push(node);
                    }
                }
                (kind, None) => return Err(Error::RequestMismatch(format!("{kind} request without node"))),
            }
        }
        if edits.len() >= self.z.nrows() && edits.values().all(|e| e.dropped) {
            return Err(Error::Parameter("request would remove every training graph".into()));
        }
        Ok(edits)
    }

    /// New embedding of an edited graph plus the bank (and power cache) it
    /// was computed with.
    fn reembed(&mut self, index: usize, edit: &Edit) -> Result<(DVector<f64>, FilterBank, Option<PowerCache>)> {
        let family = self.scattering.family;
        let mut ops = OpCount::default();
        let slot = self.slots[index].as_mut().expect("planned graph has a slot");
        if edit.removed_nodes.is_empty() {
            let bank = match slot.bank.take() {
                Some(b) => b,
                None => match &slot.cache {
                    Some(c) => c.filter_bank(&slot.graph, &mut ops)?,
                    None => build_filter_bank(&slot.graph, &family)?,
                },
            };
            let e = embed_with_bank(edit.graph.features(), &bank, &self.scattering, &mut ops)?;
            return Ok((e.values, bank, None));
        }
        if family.kind.is_polynomial() {
            let mut cache = match slot.cache.take() {
                Some(c) => c,
                None => PowerCache::build(&slot.graph, &family)?,
            };
            let mut structure = slot.graph.clone();
            for &node in &edit.removed_nodes {
                structure = embed_incremental(&structure, node, &mut cache, &self.scattering)?.graph;
            }
            let bank = cache.filter_bank(&edit.graph, &mut ops)?;
            let e = embed_with_bank(edit.graph.features(), &bank, &self.scattering, &mut ops)?;
            Ok((e.values, bank, Some(cache)))
        } else {
            slot.bank = None;
            let bank = build_filter_bank(&edit.graph, &family)?;
            let e = embed_with_bank(edit.graph.features(), &bank, &self.scattering, &mut ops)?;
            Ok((e.values, bank, None))
        }
    }

    fn diagnose(
        &self,
        outcome: &mut UnlearnOutcome,
        edits: &BTreeMap<usize, Edit>,
        old_z: &DMatrix<f64>,
        old_labels: &[i64],
        old_weights: &[DVector<f64>],
        frame_eff: f64,
    ) -> Result<()> {
        let lambda = self.config.lambda;
        let positives = Classifier::positives(&self.model.classes);
        let mut residual: f64 = 0.0;
        let mut increment: f64 = 0.0;
        for (k, &pos) in positives.iter().enumerate() {
            let w_new = &self.model.models[k].weights;
            let g_new = loss_grad(
                w_new,
                &self.z,
                &Classifier::targets(pos, &self.labels),
                None,
                lambda,
                &self.loss,
            )?;
            residual = residual.max(g_new.norm());
            if outcome.action == Action::NewtonUpdate {
                let g_old = loss_grad(
                    &old_weights[k],
                    old_z,
                    &Classifier::targets(pos, old_labels),
                    None,
                    lambda,
                    &self.loss,
                )?;
                increment = increment.max((g_new - g_old).norm());
            }
        }
        outcome.residual_true = Some(residual);
        if outcome.action == Action::NewtonUpdate {
            outcome.residual_increment = Some(increment);
        }

        let wc_kind = match (outcome.kind, outcome.requests) {
            (Some(RequestKind::FeatureZero), 1) => Some(WorstCaseKind::FeatureSingle),
            (Some(RequestKind::FeatureZero), _) => Some(WorstCaseKind::FeatureBatch),
            (Some(RequestKind::NodeRemoval), 1) | (Some(RequestKind::WholeGraph), 1) => Some(WorstCaseKind::NodeSingle),
            (Some(RequestKind::NodeRemoval), _) => Some(WorstCaseKind::NodeBatch),
            _ => None,
        };
        if let Some(kind) = wc_kind {
            let g_n = if outcome.requests == 1 {
                edits.values().next().map_or(1, |e| e.nodes_before)
            } else {
                self.slots
                    .iter()
                    .flatten()
                    .map(|s| s.graph.active_count())
                    .min()
                    .unwrap_or(1)
            };
            let params = WorstCaseParams {
                gamma1: self.loss.gamma1,
                gamma2: self.loss.gamma2,
                c1: self.loss.c1.max(self.loss.c2 * frame_eff),
                c2: self.loss.c2,
                lambda,
                n: self.z.nrows(),
                g_n,
                frame: frame_eff,
                m: outcome.requests,
            };
            match worst_case_bound(kind, &params) {
                Ok(v) => outcome.worst_case = Some(v),
                Err(e) => log::warn!("worst-case bound skipped: {e}"),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::train;
    use crate::graph::Split;
    use crate::scattering::ScatteringConfig;
    use crate::synthetic::{generate, SyntheticConfig};
    use crate::wavelets::{FamilyKind, WaveletFamily};
    use approx::assert_abs_diff_eq;

    fn small_dataset(n: usize, seed: u64) -> Dataset {
        let cfg = SyntheticConfig {
            graphs: n,
            min_nodes: 6,
            max_nodes: 12,
            ..SyntheticConfig::default()
        };
        let ds = generate(&cfg, seed).unwrap();
        let len = ds.len();
        ds.with_split(Split::all_train(len)).unwrap()
    }

    /// Highest-degree node, so that removing it moves the embedding.
    fn hub(ds: &Dataset, graph: usize) -> usize {
        ds.graphs[graph].degrees().imax()
    }

    fn scattering() -> ScatteringConfig {
        ScatteringConfig::new(WaveletFamily::new(FamilyKind::Diffusion, 2, 1).unwrap(), 2).unwrap()
    }

    #[test]
    fn delta_examples() {
        let loss = LossModel::logistic();
        let z = DVector::from_vec(vec![0.6, -0.8]);
        let w = DVector::from_vec(vec![0.3, 0.1]);
        let same = compute_delta(&w, &z, Some(&z), 1.0, &loss, 0.1, RequestKind::NodeRemoval).unwrap();
        assert_eq!(same.norm(), 0.0);
        let whole = compute_delta(&DVector::zeros(2), &z, None, 1.0, &loss, 0.1, RequestKind::WholeGraph).unwrap();
        assert!((whole + &z * 0.5).norm() < 1e-15);
        assert!(compute_delta(&w, &z, None, 1.0, &loss, 0.1, RequestKind::FeatureZero).is_err());
        assert!(compute_delta(&w, &z, Some(&z), 1.0, &loss, 0.1, RequestKind::WholeGraph).is_err());
        let other = DVector::from_vec(vec![-1.0, 0.0]);
        let d = compute_delta(&w, &z, Some(&other), -1.0, &loss, 0.1, RequestKind::FeatureZero).unwrap();
        assert!(d.norm() <= 2.0 * loss.c1);
    }

    #[test]
    fn zero_delta_keeps_weights() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let w = DVector::from_vec(vec![0.2, -0.1]);
        let w2 = newton_update(
            &w,
            &z,
            &[1.0, -1.0, 1.0],
            0.1,
            &DVector::zeros(2),
            &LossModel::logistic(),
        )
        .unwrap();
        assert_eq!(w2, w);
        assert_eq!(data_dependent_bound(3.0, &z, &DVector::zeros(2), 0.25, 1.0), 0.0);
        assert_eq!(
            data_dependent_bound(3.0, &z, &DVector::from_vec(vec![1.0, 1.0]), 0.0, 1.0),
            0.0
        );
    }

    #[test]
    fn linear_newton_step_is_exact() {
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, -0.3, 1.0, 0.5, 0.5, 0.9, -0.4]);
        let y = [1.0, -1.0, 1.0, 1.0];
        let loss = LossModel::linear();
        let lambda = 0.05;
        let m = train(&z, &y, lambda, 0.0, 0, loss).unwrap();
        // replace the last row
        let mut z2 = z.clone();
        z2.row_mut(3).copy_from_slice(&[0.1, 0.0]);
        let delta = compute_delta(
            &m.weights,
            &z.row(3).transpose(),
            Some(&z2.row(3).transpose()),
            1.0,
            &loss,
            lambda,
            RequestKind::FeatureZero,
        )
        .unwrap();
        let w2 = newton_update(&m.weights, &z2, &y, lambda, &delta, &loss).unwrap();
        // closed-form ridge on the edited data
        let a = z2.transpose() * &z2 * 2.0 + DMatrix::identity(2, 2) * (lambda * 4.0);
        let rhs = z2.transpose() * DVector::from_row_slice(&y) * 2.0;
        let exact = a.cholesky().unwrap().solve(&rhs);
        assert!((w2 - exact).norm() < 1e-12);
    }

    #[test]
    fn logistic_newton_step_reduces_residual() {
        let ds = small_dataset(10, 3);
        let cfg = UnlearnConfig {
            lambda: 0.01,
            alpha: 0.0,
            guard: GuardPolicy::Disabled,
            ..UnlearnConfig::default()
        };
        let mut u = Unlearner::new(&ds, scattering(), cfg).unwrap();
        let w_before = u.classifier().models[0].weights.clone();
        u.process_request(RemovalRequest::node(2, hub(&ds, 2))).unwrap();
        let y = u.targets(0);
        let before = loss_grad(&w_before, u.embeddings(), &y, None, 0.01, &u.loss)
            .unwrap()
            .norm();
        let after = u.residual(0).unwrap();
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn worst_case_examples() {
        let p = WorstCaseParams {
            gamma1: 0.25,
            gamma2: 0.25,
            c1: 1.0,
            c2: 1.0,
            lambda: 0.1,
            n: 100,
            g_n: 10,
            frame: 3f64.sqrt(),
            m: 1,
        };
        let node = worst_case_bound(WorstCaseKind::NodeSingle, &p).unwrap();
        assert_abs_diff_eq!(node, 3f64.powf(1.5), epsilon = 1e-12);
        let single = worst_case_bound(WorstCaseKind::FeatureSingle, &p).unwrap();
        let batch = worst_case_bound(WorstCaseKind::FeatureBatch, &p).unwrap();
        assert_eq!(single, batch);
        let big = WorstCaseParams { m: 10, ..p };
        assert!(matches!(
            worst_case_bound(WorstCaseKind::NodeBatch, &big),
            Err(Error::BatchTooLarge { m: 10, min_nodes: 10 })
        ));
        let four = WorstCaseParams { m: 4, ..p };
        assert_abs_diff_eq!(
            worst_case_bound(WorstCaseKind::NodeBatch, &four).unwrap(),
            16.0 * node,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(energy_constant(1.0, 3), 3f64.sqrt(), epsilon = 1e-15);
        let linear = WorstCaseParams {
            gamma2: 0.0,
            c1: f64::INFINITY,
            ..p
        };
        assert_eq!(worst_case_bound(WorstCaseKind::FeatureSingle, &linear).unwrap(), 0.0);
    }

    #[test]
    fn feature_bound_takes_smaller_branch() {
        let p = WorstCaseParams {
            gamma1: 0.25,
            gamma2: 0.25,
            c1: 1.0,
            c2: 1.0,
            lambda: 1.0,
            n: 10,
            g_n: 1000,
            frame: 1.0,
            m: 1,
        };
        let lead = 0.25 / 10.0;
        let stable = (0.25 + 1.0_f64).powi(2) / 1000.0;
        assert_abs_diff_eq!(
            worst_case_bound(WorstCaseKind::FeatureSingle, &p).unwrap(),
            lead * stable,
            epsilon = 1e-15
        );
    }

    #[test]
    fn noise_calibration() {
        let c1 = noise_multiplier(1.5 * (-0.5f64).exp()).unwrap();
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            noise_multiplier(1e-4).unwrap(),
            (2.0 * 15000f64.ln()).sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(noise_multiplier(1e-4).unwrap(), 4.385, epsilon = 1e-3);
        let a = calibrate_noise(1.0, 1e-4, 0.3).unwrap();
        let b = calibrate_noise(2.0, 1e-4, 0.3).unwrap();
        assert_abs_diff_eq!(a, 2.0 * b, epsilon = 1e-15);
        assert!(calibrate_noise(1.0, 1.5, 0.3).is_err());
        assert!(calibrate_noise(1.0, 2.0, 0.3).is_err());
    }

    #[test]
    fn ledger_threshold_and_reset() {
        let mut l = BudgetLedger::new(1.0, 1e-4, 0.1, 0.25, 1.0).unwrap();
        let expect = 0.1 / (2.0 * 15000f64.ln()).sqrt();
        assert!((l.threshold() - expect).abs() < 1e-12);
        assert_abs_diff_eq!(l.threshold(), 0.0228, epsilon = 1e-4);
        assert_eq!(l.charge(0.01), Action::NewtonUpdate);
        assert_eq!(l.charge(0.01), Action::NewtonUpdate);
        assert_eq!(l.charge(0.01), Action::Retrain);
        assert_eq!(l.beta(), 0.0);
        assert_eq!(l.retrain_count(), 1);
        assert_eq!(l.charge(0.0228), Action::NewtonUpdate);
        l.set_budget(1.0, 1e-4, 0.2).unwrap();
        assert!((l.threshold() - 2.0 * expect).abs() < 1e-15);
        let mut zero = BudgetLedger::new(1.0, 1e-4, 0.0, 0.25, 1.0).unwrap();
        assert_eq!(zero.charge(1e-300), Action::Retrain);
        assert_eq!(zero.charge(0.0), Action::NewtonUpdate);
    }

    #[test]
    fn spectral_norm_cache_tracks_edits() {
        let mut z = DMatrix::from_fn(12, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0 - 0.3);
        let mut cache = SpectralNormCache::new(&z);
        let svd = |m: &DMatrix<f64>| m.clone().singular_values().max();
        assert!((cache.norm() - svd(&z)).abs() < 1e-5 * svd(&z));
        let old = z.row(3).transpose();
        let new = DVector::from_vec(vec![2.0, -1.0, 0.0, 0.5]);
        cache.replace_row(&old, &new);
        z.row_mut(3).copy_from(&new.transpose());
        assert!((cache.norm() - svd(&z)).abs() < 1e-5 * svd(&z));
        cache.remove_row(&z.row(0).transpose());
        let z = z.remove_row(0);
        assert!((cache.norm() - svd(&z)).abs() < 1e-5 * svd(&z));
    }

    #[test]
    fn request_json_lines() {
        let text = "{\"kind\":\"feature\",\"graph\":2,\"node\":1}\n\n{\"kind\":\"graph\",\"graph\":0}\n";
        let reqs = parse_requests(text, Path::new("r.jsonl")).unwrap();
        assert_eq!(
            reqs,
            vec![RemovalRequest::feature(2, 1), RemovalRequest::whole_graph(0)]
        );
        let bad = parse_requests("{\"kind\":\"node\",\"graph\":2}\n", Path::new("r.jsonl"));
        assert!(matches!(bad, Err(Error::Parse { line: 1, .. })));
        let bad = parse_requests("\n{\"kind\":\"graph\",\"graph\":2,\"node\":0}", Path::new("r.jsonl"));
        assert!(matches!(bad, Err(Error::Parse { line: 2, .. })));
        assert_eq!(
            serde_json::to_string(&RemovalRequest::whole_graph(4)).unwrap(),
            "{\"kind\":\"graph\",\"graph\":4}"
        );
    }

    #[test]
    fn huge_alpha_never_retrains() {
        let ds = small_dataset(12, 1);
        let cfg = UnlearnConfig {
            lambda: 0.01,
            alpha: 0.1,
            epsilon: 1e9,
            ..UnlearnConfig::default()
        };
        let mut u = Unlearner::new(&ds, scattering(), cfg).unwrap();
        let o = u.process_request(RemovalRequest::node(2, hub(&ds, 2))).unwrap();
        assert_eq!(o.action, Action::NewtonUpdate);
        assert!(o.bound_used > 0.0);
        assert_eq!(o.beta, o.bound_used);
    }

    #[test]
    fn zero_alpha_always_retrains() {
        let ds = small_dataset(12, 2);
        let cfg = UnlearnConfig {
            lambda: 0.01,
            alpha: 0.0,
            ..UnlearnConfig::default()
        };
        let mut u = Unlearner::new(&ds, scattering(), cfg).unwrap();
        for (i, req) in [
            RemovalRequest::feature(1, 0),
            RemovalRequest::node(2, 1),
            RemovalRequest::whole_graph(3),
        ]
        .into_iter()
        .enumerate()
        {
            let o = u.process_request(req).unwrap();
            assert_eq!(o.action, Action::Retrain);
            assert_eq!(o.beta, 0.0);
            assert_eq!(o.retrain_count, i + 1);
        }
        assert!(u.residual(0).unwrap() <= 1e-8);
    }

    #[test]
    fn stale_and_invalid_requests() {
        let ds = small_dataset(8, 4);
        let cfg = UnlearnConfig {
            lambda: 0.01,
            alpha: 1.0,
            ..UnlearnConfig::default()
        };
        let mut u = Unlearner::new(&ds, scattering(), cfg).unwrap();
        u.process_request(RemovalRequest::whole_graph(2)).unwrap();
        assert!(matches!(
            u.process_request(RemovalRequest::node(2, 0)),
            Err(Error::StaleRequest(_))
        ));
        assert!(matches!(
            u.process_request(RemovalRequest::whole_graph(99)),
            Err(Error::RequestMismatch(_))
        ));
        u.process_request(RemovalRequest::node(3, 0)).unwrap();
        assert!(matches!(
            u.process_request(RemovalRequest::node(3, 0)),
            Err(Error::StaleRequest(_))
        ));
        assert!(matches!(
            u.process_request(RemovalRequest::feature(3, 0)),
            Err(Error::StaleRequest(_))
        ));
        assert!(matches!(
            u.process_request(RemovalRequest::node(3, 500)),
            Err(Error::NodeOutOfRange { .. })
        ));
        // failed requests leave the state untouched
        assert_eq!(u.steps(), 2);
        assert_eq!(u.embeddings().nrows(), 7);
        assert_eq!(u.train_rows().len(), 7);
        assert!(!u.train_rows().contains(&2));
    }

    #[test]
    fn outcome_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.csv");
        write_outcomes_csv(&p, &[], None).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "step,kind,action,bound,beta,threshold,wall_ms\n"
        );
        write_outcomes_csv(&p, &[], Some(&[])).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .trim_end()
            .ends_with("wall_ms,test_acc"));
    }
}
