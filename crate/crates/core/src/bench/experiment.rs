use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ProtocolKind, RemovalProtocol};
use super::report::{RunReport, SeedResult, StepRecord};
use crate::classifier::{derive_seed, Classifier};
use crate::error::{Error, Result};
use crate::graph::{load_dataset, Dataset, DatasetFormat, Split};
use crate::scattering::{embed, ScatteringConfig};
use crate::synthetic::generate;
use crate::unlearn::{
    training_embeddings, Action, GuardPolicy, RemovalRequest, UnlearnConfig, UnlearnOutcome, Unlearner,
};

/// Absolute slack for floating-point noise in the dominance checks.
pub const DOMINANCE_SLACK: f64 = 1e-10;

pub fn load_or_generate(config: &ExperimentConfig) -> Result<Dataset> {
    match &config.dataset {
        Some(dir) => load_dataset(dir, DatasetFormat::TuEdgeList),
        None => generate(&config.synthetic, config.synthetic_seed),
    }
}

/// Deterministic request stream for one seed. With `count` unset every
/// selected training graph receives one request; otherwise `count` requests
/// are drawn with graphs allowed to repeat. Node removals never empty a
/// graph and whole-graph removals keep at least one training graph.
pub fn plan_requests(dataset: &Dataset, protocol: &RemovalProtocol, seed: u64) -> Result<Vec<RemovalRequest>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(protocol.order_seed, seed.wrapping_add(1)));
    let train = &dataset.split.train;
    let mut active: Vec<Vec<bool>> = dataset.graphs.iter().map(|g| g.active_mask().to_vec()).collect();
    let mut zeroed: Vec<Vec<bool>> = dataset
        .graphs
        .iter()
        .map(|g| g.features().iter().map(|v| *v == 0.0).collect())
        .collect();
    let mut dropped = vec![false; dataset.len()];
    let mut remaining = train.len();

    let mut draw = |gi: usize, rng: &mut ChaCha8Rng| -> Option<RemovalRequest> {
        if dropped[gi] {
            return None;
        }
        let kind = match protocol.kind {
            ProtocolKind::Mixed => {
                if rng.random_bool(0.5) {
                    ProtocolKind::Feature
                } else {
                    ProtocolKind::Node
                }
            }
            k => k,
        };
        let live: Vec<usize> = (0..active[gi].len()).filter(|&v| active[gi][v]).collect();
        match kind {
            ProtocolKind::Graph => {
                if remaining <= 1 {
                    return None;
                }
                dropped[gi] = true;
                remaining -= 1;
                Some(RemovalRequest::whole_graph(gi))
            }
            ProtocolKind::Node => {
                if live.len() < 2 {
                    return None;
                }
                let v = live[rng.random_range(0..live.len())];
                active[gi][v] = false;
                zeroed[gi][v] = true;
                Some(RemovalRequest::node(gi, v))
            }
            _ => {
                if live.is_empty() {
                    return None;
                }
                let fresh: Vec<usize> = live.iter().copied().filter(|&v| !zeroed[gi][v]).collect();
                let pool = if fresh.is_empty() { &live } else { &fresh };
                let v = pool[rng.random_range(0..pool.len())];
                zeroed[gi][v] = true;
                Some(RemovalRequest::feature(gi, v))
            }
        }
    };

    let mut out = Vec::new();
    match protocol.count {
        None => {
            let want = (protocol.fraction * train.len() as f64).round() as usize;
            let mut order = train.clone();
            order.shuffle(&mut rng);
            for gi in order {
                if out.len() == want {
                    break;
                }
                if let Some(r) = draw(gi, &mut rng) {
                    out.push(r);
                }
            }
        }
        Some(count) => {
            let mut misses = 0;
            while out.len() < count {
                let gi = train[rng.random_range(0..train.len())];
                match draw(gi, &mut rng) {
                    Some(r) => {
                        out.push(r);
                        misses = 0;
                    }
                    None => {
                        misses += 1;
                        if misses > 100 * train.len().max(1) {
                            return Err(Error::Parameter(format!(
                                "protocol ran out of removable items after {} requests",
                                out.len()
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn test_embeddings(dataset: &Dataset, scattering: &ScatteringConfig) -> Result<(DMatrix<f64>, Vec<i64>)> {
    let test = &dataset.split.test;
    let rows: Vec<_> = test
        .par_iter()
        .map(|&i| embed(&dataset.graphs[i], scattering).map(|e| e.values))
        .collect::<Result<_>>()?;
    let mut z = DMatrix::zeros(rows.len(), scattering.dim());
    for (r, v) in rows.iter().enumerate() {
        z.row_mut(r).copy_from(&v.transpose());
    }
    Ok((z, test.iter().map(|&i| dataset.graphs[i].label).collect()))
}

fn unlearn_config(config: &ExperimentConfig, seed: u64, guard: GuardPolicy, frame: f64) -> UnlearnConfig {
    UnlearnConfig {
        lambda: config.lambda,
        alpha: config.alpha,
        epsilon: config.epsilon,
        delta: config.delta,
        loss: config.loss,
        guard,
        diagnostics: false,
        seed,
        frame: Some(frame),
    }
}

fn with_context(seed: u64, e: Error) -> Error {
    match e {
        Error::Parameter(m) => Error::Parameter(format!("seed {seed}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("seed {seed}: {m}")),
        other => other,
    }
}

/// Splits, embeds and runs one seed; returns the seed summary and records
/// of every arm.
fn run_seed(config: &ExperimentConfig, base: &Dataset, seed: u64) -> Result<(SeedResult, Vec<StepRecord>)> {
    let split = Split::random(base.len(), config.split, seed)?;
    let dataset = base.clone().with_split(split)?;
    let scattering = config.scattering.build()?;
    let requests = plan_requests(&dataset, &config.removal, seed)?;
    let (z_test, y_test) = test_embeddings(&dataset, &scattering)?;

    let start = Instant::now();
    let (z, frame) = training_embeddings(&dataset, &scattering, true)?;
    let mut arms = vec![("unlearn", GuardPolicy::Enforce)];
    if config.retrain_arm {
        arms.push(("retrain", GuardPolicy::AlwaysRetrain));
    }
    let mut records = Vec::new();
    let mut seed_result = None;
    for (name, guard) in arms {
        let mut u = Unlearner::with_embeddings(
            &dataset,
            scattering,
            unlearn_config(config, seed, guard, frame),
            z.clone(),
            frame,
        )?;
        if seed_result.is_none() {
            let train_ms = if config.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            seed_result = Some(SeedResult {
                seed,
                train_graphs: dataset.split.train.len(),
                test_graphs: y_test.len(),
                requests: requests.len(),
                frame,
                initial_accuracy: u.classifier().accuracy(&z_test, &y_test),
                train_ms,
            });
        }
        let mut cumulative = 0.0;
        for req in &requests {
            let o = u.process_request(*req).map_err(|e| with_context(seed, e))?;
            if config.record_timing {
                cumulative += o.wall_time.as_secs_f64() * 1e3;
            }
            records.push(StepRecord {
                seed,
                arm: name.to_string(),
                step: o.step,
                kind: o.kind_label().to_string(),
                action: o.action.name().to_string(),
                accuracy: u.classifier().accuracy(&z_test, &y_test),
                cumulative_ms: cumulative,
                bound: o.bound_used,
                beta: o.beta,
                retrain_count: o.retrain_count,
                residual_true: o.residual_true,
                residual_increment: o.residual_increment,
                worst_case: o.worst_case,
            });
        }
    }
    Ok((seed_result.expect("at least one arm"), records))
}

/// Sequential unlearning against the retrain-every-request baseline, one
/// independent run per seed (seeds run in parallel).
pub fn run_unlearning_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let base = load_or_generate(config)?;
    let per_seed: Vec<(SeedResult, Vec<StepRecord>)> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, &base, seed))
        .collect::<Result<_>>()?;
    let mut seeds = Vec::new();
    let mut records = Vec::new();
    for (s, r) in per_seed {
        seeds.push(s);
        records.extend(r);
    }
    Ok(RunReport::new(config.clone(), seeds, records))
}

fn validate_seed(config: &ExperimentConfig, base: &Dataset, seed: u64) -> Result<(SeedResult, Vec<StepRecord>)> {
    let split = Split::random(base.len(), config.split, seed)?;
    let dataset = base.clone().with_split(split)?;
    let scattering = config.scattering.build()?;
    let requests = plan_requests(&dataset, &config.removal, seed)?;
    let (z, frame) = training_embeddings(&dataset, &scattering, true)?;
    let mut ucfg = unlearn_config(config, seed, GuardPolicy::Disabled, frame);
    ucfg.alpha = 0.0;
    ucfg.diagnostics = true;
    let mut u = Unlearner::with_embeddings(&dataset, scattering, ucfg, z, frame)?;
    let k = u.classifier().models.len();
    let initial = (0..k).map(|m| u.residual(m)).collect::<Result<Vec<_>>>()?;
    let r0 = initial.iter().copied().fold(0.0, f64::max);

    let mut records = Vec::new();
    let mut looser = 0usize;
    for req in &requests {
        let before = u.graph(req.graph()).cloned();
        let o = u.process_request(*req).map_err(|e| with_context(seed, e))?;
        let inc = o.residual_increment.unwrap_or(0.0);
        let res = o.residual_true.unwrap_or(0.0);
        let tol = |v: f64| v * (1.0 + 1e-9) + DOMINANCE_SLACK;
        let mut failed = Vec::new();
        if inc > tol(o.bound_used) {
            failed.push("data-dependent bound below the residual increment");
        }
        if o.worst_case.is_some_and(|wc| inc > tol(wc)) {
            failed.push("worst-case bound below the residual increment");
        }
        if res > tol(o.beta + r0) {
            failed.push("accumulated bound below the true residual");
        }
        if !failed.is_empty() {
            return Err(Error::DominanceViolation(dump(
                seed,
                req,
                &o,
                r0,
                before.as_ref(),
                &u,
                &failed,
            )));
        }
        if o.worst_case.is_some_and(|wc| wc >= o.bound_used) {
            looser += 1;
        }
        records.push(StepRecord {
            seed,
            arm: "validate".into(),
            step: o.step,
            kind: o.kind_label().to_string(),
            action: o.action.name().to_string(),
            accuracy: 0.0,
            cumulative_ms: 0.0,
            bound: o.bound_used,
            beta: o.beta,
            retrain_count: o.retrain_count,
            residual_true: o.residual_true,
            residual_increment: o.residual_increment,
            worst_case: o.worst_case,
        });
    }
    log::info!(
        "seed {seed}: worst-case bound at least the data-dependent one on {looser}/{} requests",
        records.len()
    );
    let result = SeedResult {
        seed,
        train_graphs: dataset.split.train.len(),
        test_graphs: dataset.split.test.len(),
        requests: requests.len(),
        frame,
        initial_accuracy: 0.0,
        train_ms: 0.0,
    };
    Ok((result, records))
}

fn dump(
    seed: u64,
    req: &RemovalRequest,
    o: &UnlearnOutcome,
    r0: f64,
    graph: Option<&crate::graph::Graph>,
    u: &Unlearner,
    failed: &[&str],
) -> String {
    let graph = graph.map(|g| {
        let edges: Vec<(usize, usize)> = (0..g.node_count())
            .flat_map(|i| g.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
            .collect();
        json!({
            "nodes": g.node_count(),
            "active": g.active_mask(),
            "edges": edges,
            "features": g.features().as_slice(),
        })
    });
    let weights: Vec<Vec<f64>> = u
        .classifier()
        .models
        .iter()
        .map(|m| m.weights.as_slice().to_vec())
        .collect();
    json!({
        "failed": failed,
        "seed": seed,
        "step": o.step,
        "request": req,
        "bound": o.bound_used,
        "worst_case": o.worst_case,
        "residual_increment": o.residual_increment,
        "residual_true": o.residual_true,
        "beta": o.beta,
        "initial_residual": r0,
        "frame": u.frame(),
        "lambda": u.config().lambda,
        "graph_before": graph,
        "weights_after": weights,
    })
    .to_string()
}

/// Runs the request protocol with `alpha = 0` and the guard off, checking
/// on every request that the data-dependent and worst-case bounds dominate
/// the residual added by the step and that the accumulated bound dominates
/// the true residual. The first violation aborts with an instance dump.
pub fn run_bound_validation(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let base = load_or_generate(config)?;
    let mut cfg = config.clone();
    cfg.alpha = 0.0;
    cfg.retrain_arm = false;
    let per_seed: Vec<(SeedResult, Vec<StepRecord>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| validate_seed(&cfg, &base, seed))
        .collect::<Result<_>>()?;
    let mut seeds = Vec::new();
    let mut records = Vec::new();
    for (s, r) in per_seed {
        seeds.push(s);
        records.extend(r);
    }
    Ok(RunReport::new(cfg, seeds, records))
}

/// Outcomes of an explicit request stream for one seed, with the test
/// accuracy after each request.
#[derive(Debug, Clone)]
pub struct StreamResult {
    pub seed: u64,
    pub outcomes: Vec<UnlearnOutcome>,
    pub test_accuracy: Vec<f64>,
    pub initial_accuracy: f64,
}

pub fn run_request_stream(config: &ExperimentConfig, requests: &[RemovalRequest]) -> Result<Vec<StreamResult>> {
    config.validate()?;
    let base = load_or_generate(config)?;
    config
        .seeds
        .par_iter()
        .map(|&seed| {
            let dataset = base
                .clone()
                .with_split(Split::random(base.len(), config.split, seed)?)?;
            let scattering = config.scattering.build()?;
            let (z_test, y_test) = test_embeddings(&dataset, &scattering)?;
            let (z, frame) = training_embeddings(&dataset, &scattering, true)?;
            let mut u = Unlearner::with_embeddings(
                &dataset,
                scattering,
                unlearn_config(config, seed, GuardPolicy::Enforce, frame),
                z,
                frame,
            )?;
            let initial_accuracy = u.classifier().accuracy(&z_test, &y_test);
            let mut outcomes = Vec::new();
            let mut test_accuracy = Vec::new();
            for req in requests {
                outcomes.push(u.process_request(*req).map_err(|e| with_context(seed, e))?);
                test_accuracy.push(u.classifier().accuracy(&z_test, &y_test));
            }
            Ok(StreamResult {
                seed,
                outcomes,
                test_accuracy,
                initial_accuracy,
            })
        })
        .collect()
}

/// Trains on the seed's training split; returns the model and its test
/// accuracy.
pub fn train_model(config: &ExperimentConfig, seed: u64) -> Result<(Classifier, f64)> {
    config.validate()?;
    let base = load_or_generate(config)?;
    let dataset = base
        .clone()
        .with_split(Split::random(base.len(), config.split, seed)?)?;
    let scattering = config.scattering.build()?;
    let (z, frame) = training_embeddings(&dataset, &scattering, false)?;
    let u = Unlearner::with_embeddings(
        &dataset,
        scattering,
        unlearn_config(config, seed, GuardPolicy::Enforce, frame),
        z,
        frame,
    )?;
    let (z_test, y_test) = test_embeddings(&dataset, &scattering)?;
    let acc = u.classifier().accuracy(&z_test, &y_test);
    Ok((u.classifier().clone(), acc))
}

/// Count of retrains in the unlearning arm per seed.
pub fn retrain_counts(report: &RunReport) -> Vec<(u64, usize)> {
    report
        .seeds
        .iter()
        .map(|s| {
            let n = report
                .records_for("unlearn")
                .filter(|r| r.seed == s.seed && r.action == Action::Retrain.name())
                .count();
            (s.seed, n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::SyntheticConfig;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            synthetic: SyntheticConfig {
                graphs: 40,
                min_nodes: 6,
                max_nodes: 14,
                ..SyntheticConfig::default()
            },
            split: [0.5, 0.1, 0.4],
            seeds: vec![0, 1],
            lambda: 1e-2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn planned_requests_are_valid_and_deterministic() {
        let cfg = small();
        let base = load_or_generate(&cfg).unwrap();
        let ds = base
            .clone()
            .with_split(Split::random(base.len(), cfg.split, 3).unwrap())
            .unwrap();
        let proto = RemovalProtocol {
            fraction: 0.5,
            ..RemovalProtocol::default()
        };
        let a = plan_requests(&ds, &proto, 3).unwrap();
        assert_eq!(a, plan_requests(&ds, &proto, 3).unwrap());
        assert_eq!(a.len(), 10);
        let mut graphs: Vec<usize> = a.iter().map(|r| r.graph()).collect();
        graphs.sort_unstable();
        graphs.dedup();
        assert_eq!(graphs.len(), 10);
        assert!(graphs.iter().all(|g| ds.split.train.contains(g)));
        let counted = RemovalProtocol {
            count: Some(60),
            kind: ProtocolKind::Mixed,
            ..RemovalProtocol::default()
        };
        assert_eq!(plan_requests(&ds, &counted, 0).unwrap().len(), 60);
    }

    #[test]
    fn record_count_matches_requests() {
        let cfg = small();
        let r = run_unlearning_experiment(&cfg).unwrap();
        for s in &r.seeds {
            assert_eq!(
                r.records_for("unlearn").filter(|x| x.seed == s.seed).count(),
                s.requests
            );
            assert_eq!(
                r.records_for("retrain").filter(|x| x.seed == s.seed).count(),
                s.requests
            );
        }
        let counts = retrain_counts(&r);
        for (seed, n) in counts {
            let last = r.records_for("unlearn").filter(|x| x.seed == seed).last().unwrap();
            assert_eq!(last.retrain_count, n);
        }
    }

    #[test]
    fn zero_fraction_is_plain_evaluation() {
        let mut cfg = small();
        cfg.removal.fraction = 0.0;
        let r = run_unlearning_experiment(&cfg).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.seeds.len(), 2);
        let (_, acc) = train_model(&cfg, 0).unwrap();
        assert_eq!(acc, r.seeds[0].initial_accuracy);
    }

    #[test]
    fn deterministic_without_timing() {
        let mut cfg = small();
        cfg.record_timing = false;
        let a = run_unlearning_experiment(&cfg).unwrap().to_json().unwrap();
        let b = run_unlearning_experiment(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_runs_clean() {
        let mut cfg = small();
        cfg.removal = RemovalProtocol {
            count: Some(30),
            kind: ProtocolKind::Mixed,
            ..RemovalProtocol::default()
        };
        let r = run_bound_validation(&cfg).unwrap();
        assert_eq!(r.records.len(), 60);
        assert!(r.records.iter().all(|x| x.residual_increment.is_some()));
    }
}
