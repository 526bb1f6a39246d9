use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use graph_unlearn::bench::{
    emit_report, load_or_generate, parse_override_args, run_bound_validation, run_request_stream,
    run_unlearning_experiment, train_model, ExperimentConfig, ReportFormat,
};
use graph_unlearn::graph::write_dataset;
use graph_unlearn::scattering::{embed_dataset, write_embeddings_csv};
use graph_unlearn::unlearn::{read_requests, write_outcomes_csv};
use graph_unlearn::Error;

/// Graph scattering embeddings with certified unlearning.
///
/// Every subcommand reads an optional JSON or TOML experiment config; any
/// field can be overridden with `--key value` (nested keys with dots, e.g.
/// `--removal.fraction 0.2`).
#[derive(Parser)]
#[command(name = "graph-unlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed every graph of the dataset into `<output>/embeddings.csv`.
    Embed(Common),
    /// Train on the first seed's training split and save the model(s).
    Train(Common),
    /// Run the sequential unlearning experiment, or an explicit request stream.
    Unlearn {
        /// JSON-lines request stream; replaces the removal protocol.
        #[arg(long)]
        requests: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Check bound dominance with alpha = 0; fails on the first violation.
    ValidateBounds(Common),
    /// Write the synthetic dataset to `<output>` in the TU layout.
    GenSynthetic(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON, or TOML by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; repeat for several runs. Replaces the config's seed list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// `--key value` overrides of config fields.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

impl Common {
    /// Config file, then overrides, then seeds. Flags that clap could not
    /// see because they followed an override are picked up here.
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        self.resolve_with(&mut None)
    }

    fn resolve_with(&self, requests: &mut Option<PathBuf>) -> anyhow::Result<ExperimentConfig> {
        let mut config_path = self.config.clone();
        let mut seeds = self.seeds.clone();
        let mut overrides = Vec::new();
        for (key, value) in parse_override_args(&self.overrides)? {
            match key.as_str() {
                "seed" => seeds.push(value.parse().with_context(|| format!("--seed {value}"))?),
                "config" => config_path = Some(PathBuf::from(value)),
                "requests" => *requests = Some(PathBuf::from(value)),
                _ => overrides.push((key, value)),
            }
        }
        let base = match &config_path {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let mut config = base.with_overrides(&overrides)?;
        if !seeds.is_empty() {
            config.seeds = seeds;
        }
        config.validate()?;
        Ok(config)
    }
}

fn create_output(config: &ExperimentConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&config.output).with_context(|| format!("creating {}", config.output.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Embed(common) => {
            let config = common.resolve()?;
            let dataset = load_or_generate(&config)?;
            let scattering = config.scattering.build()?;
            let (z, labels) = embed_dataset(&dataset, &scattering)?;
            create_output(&config)?;
            let path = config.output.join("embeddings.csv");
            let ids: Vec<usize> = dataset.graphs.iter().map(|g| g.graph_id).collect();
            write_embeddings_csv(&path, &scattering, &z, &ids, &labels)?;
            println!("{} graphs, {} coefficients -> {}", z.nrows(), z.ncols(), path.display());
        }
        Command::Train(common) => {
            let config = common.resolve()?;
            let seed = config.seeds[0];
            let (model, acc) = train_model(&config, seed)?;
            create_output(&config)?;
            let positives = graph_unlearn::classifier::Classifier::positives(&model.classes);
            for (m, pos) in model.models.iter().zip(positives) {
                let name = if model.models.len() == 1 {
                    "model.json".to_string()
                } else {
                    format!("model-{pos}.json")
                };
                let path = config.output.join(name);
                m.save(&path)?;
                println!("saved {}", path.display());
            }
            println!("seed {seed}: test accuracy {acc:.4}");
        }
        Command::Unlearn { mut requests, common } => {
            let config = common.resolve_with(&mut requests)?;
            create_output(&config)?;
            match requests {
                Some(path) => {
                    let reqs = read_requests(&path)?;
                    for r in run_request_stream(&config, &reqs)? {
                        let out = config.output.join(format!("outcomes-seed{}.csv", r.seed));
                        write_outcomes_csv(&out, &r.outcomes, Some(&r.test_accuracy))?;
                        let retrains = r.outcomes.last().map_or(0, |o| o.retrain_count);
                        println!(
                            "seed {}: {} requests, {} retrains, accuracy {:.4} -> {:.4}, log {}",
                            r.seed,
                            r.outcomes.len(),
                            retrains,
                            r.initial_accuracy,
                            r.test_accuracy.last().copied().unwrap_or(r.initial_accuracy),
                            out.display()
                        );
                    }
                }
                None => {
                    let report = run_unlearning_experiment(&config)?;
                    emit_report(&report, &config.output, &[ReportFormat::Csv, ReportFormat::Json])?;
                    for arm in &report.summary {
                        println!(
                            "{:>8}: final accuracy {:.4} +- {:.4}, time {:.1} ms, retrains {:.1}",
                            arm.arm,
                            arm.final_accuracy.mean,
                            arm.final_accuracy.std,
                            arm.total_ms.mean,
                            arm.retrain_count.mean
                        );
                    }
                    println!("report written to {}", config.output.display());
                }
            }
        }
        Command::ValidateBounds(common) => {
            let config = common.resolve()?;
            create_output(&config)?;
            match run_bound_validation(&config) {
                Ok(report) => {
                    emit_report(&report, &config.output, &[ReportFormat::Csv, ReportFormat::Json])?;
                    let looser = report
                        .records
                        .iter()
                        .filter(|r| r.worst_case.is_some_and(|w| w >= r.bound))
                        .count();
                    println!(
                        "{} requests, 0 violations; worst-case >= data-dependent on {looser}",
                        report.records.len()
                    );
                }
                Err(Error::DominanceViolation(dump)) => {
                    let path = config.output.join("violation.json");
                    std::fs::write(&path, &dump).with_context(|| format!("writing {}", path.display()))?;
                    anyhow::bail!("bound dominance violated; instance written to {}", path.display());
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::GenSynthetic(common) => {
            let config = common.resolve()?;
            let dataset = load_or_generate(&ExperimentConfig {
                dataset: None,
                ..config.clone()
            })?;
            write_dataset(&dataset, &config.output, false)?;
            println!("{} graphs written to {}", dataset.len(), config.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
