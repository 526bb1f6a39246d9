use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

/// State after one request in one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub seed: u64,
    pub arm: String,
    pub step: usize,
    pub kind: String,
    pub action: String,
    pub accuracy: f64,
    pub cumulative_ms: f64,
    pub bound: f64,
    pub beta: f64,
    pub retrain_count: usize,
    pub residual_true: Option<f64>,
    pub residual_increment: Option<f64>,
    pub worst_case: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub train_graphs: usize,
    pub test_graphs: usize,
    pub requests: usize,
    pub frame: f64,
    pub initial_accuracy: f64,
    pub train_ms: f64,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: 0.0, std: 0.0, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStat {
    pub step: usize,
    pub accuracy: Stat,
    pub cumulative_ms: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub final_accuracy: Stat,
    pub total_ms: Stat,
    pub retrain_count: Stat,
    pub per_step: Vec<StepStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedResult>,
    pub records: Vec<StepRecord>,
    pub summary: Vec<ArmSummary>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, seeds: Vec<SeedResult>, records: Vec<StepRecord>) -> RunReport {
        let summary = summarize(&seeds, &records);
        RunReport {
            version: REPORT_VERSION,
            config,
            seeds,
            records,
            summary,
        }
    }

    pub fn arm(&self, name: &str) -> Option<&ArmSummary> {
        self.summary.iter().find(|a| a.arm == name)
    }

    pub fn records_for<'a>(&'a self, arm: &'a str) -> impl Iterator<Item = &'a StepRecord> + 'a {
        self.records.iter().filter(move |r| r.arm == arm)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        if r.version != REPORT_VERSION {
            return Err(Error::Serde(format!("unsupported report version {}", r.version)));
        }
        Ok(r)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunReport> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn summarize(seeds: &[SeedResult], records: &[StepRecord]) -> Vec<ArmSummary> {
    let mut arms: Vec<String> = Vec::new();
    for r in records {
        if !arms.contains(&r.arm) {
            arms.push(r.arm.clone());
        }
    }
    arms.into_iter()
        .map(|arm| {
            let of_arm: Vec<&StepRecord> = records.iter().filter(|r| r.arm == arm).collect();
            let last: Vec<&StepRecord> = seeds
                .iter()
                .filter_map(|s| {
                    of_arm
                        .iter()
                        .filter(|r| r.seed == s.seed)
                        .max_by_key(|r| r.step)
                        .copied()
                })
                .collect();
            let max_step = of_arm.iter().map(|r| r.step).max().unwrap_or(0);
            let per_step = (1..=max_step)
                .map(|step| {
                    let at: Vec<&&StepRecord> = of_arm.iter().filter(|r| r.step == step).collect();
                    StepStat {
                        step,
                        accuracy: Stat::of(&at.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
                        cumulative_ms: Stat::of(&at.iter().map(|r| r.cumulative_ms).collect::<Vec<_>>()),
                    }
                })
                .collect();
            ArmSummary {
                arm,
                final_accuracy: Stat::of(&last.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
                total_ms: Stat::of(&last.iter().map(|r| r.cumulative_ms).collect::<Vec<_>>()),
                retrain_count: Stat::of(&last.iter().map(|r| r.retrain_count as f64).collect::<Vec<_>>()),
                per_step,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

const STEP_HEADER: [&str; 13] = [
    "seed",
    "arm",
    "step",
    "kind",
    "action",
    "accuracy",
    "cumulative_ms",
    "bound",
    "beta",
    "retrain_count",
    "residual_true",
    "residual_increment",
    "worst_case",
];

/// Writes `steps.csv` and `long.csv` (csv) and `summary.json` (json) into
/// `dir`; returns the written paths.
pub fn emit_report(report: &RunReport, dir: impl AsRef<Path>, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                let steps = dir.join("steps.csv");
                write_steps(report, &steps)?;
                written.push(steps);
                let long = dir.join("long.csv");
                write_long(report, &long)?;
                written.push(long);
            }
            ReportFormat::Json => {
                let path = dir.join("summary.json");
                std::fs::write(&path, report.to_json()?).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn write_steps(report: &RunReport, path: &Path) -> Result<()> {
    let io = |e: csv::Error| Error::Serde(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(STEP_HEADER).map_err(io)?;
    for r in &report.records {
        w.write_record([
            r.seed.to_string(),
            r.arm.clone(),
            r.step.to_string(),
            r.kind.clone(),
            r.action.clone(),
            r.accuracy.to_string(),
            r.cumulative_ms.to_string(),
            r.bound.to_string(),
            r.beta.to_string(),
            r.retrain_count.to_string(),
            opt(r.residual_true),
            opt(r.residual_increment),
            opt(r.worst_case),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per (step, arm, metric, seed).
fn write_long(report: &RunReport, path: &Path) -> Result<()> {
    let io = |e: csv::Error| Error::Serde(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["step", "arm", "metric", "value", "seed"]).map_err(io)?;
    for r in &report.records {
        let mut metrics = vec![
            ("accuracy", r.accuracy),
            ("cumulative_ms", r.cumulative_ms),
            ("bound", r.bound),
            ("beta", r.beta),
            ("retrain_count", r.retrain_count as f64),
        ];
        for (name, v) in [
            ("residual_true", r.residual_true),
            ("residual_increment", r.residual_increment),
            ("worst_case", r.worst_case),
        ] {
            if let Some(v) = v {
                metrics.push((name, v));
            }
        }
        for (name, v) in metrics {
            w.write_record([
                r.step.to_string(),
                r.arm.clone(),
                name.to_string(),
                v.to_string(),
                r.seed.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
