//! Experiment runners over sampled or generated instances.

mod dataset;
mod generate;
mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::llm::BackendKind;
use crate::nl::{Instance, NlFrontend};
use crate::pipeline::{write_trace, Ablation, ConfigError, FailureKind, Pipeline, PipelineConfig};

pub use dataset::{
    load_dataset, load_pool, parse_record, DatasetError, DatasetName, DatasetSpec, Sampling, Variant,
};
pub use generate::{generate_instances, generate_with, GeneratorOptions};
pub use report::{
    cell_label, emit_report, number, summarize, Cell, ExperimentReport, Fraction, InstanceRecord,
    ReportFormat, RunMetadata, RunSummary, REPORT_SCHEMA, REPORT_SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("request budget exhausted after {completed} instances")]
    BudgetExhausted { completed: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; defaults to the number of processors.
    pub threads: Option<usize>,
    /// Directory receiving `<run-id>/<instance-id>.trace.json` files.
    pub trace_dir: Option<PathBuf>,
    pub run_id: String,
    pub frontend: NlFrontend,
}

#[derive(Serialize)]
struct Hashed<'a> {
    dataset: &'a DatasetSpec,
    config: &'a PipelineConfig,
}

/// Hex digest identifying a dataset spec and pipeline config pair.
pub fn config_hash(spec: &DatasetSpec, config: &PipelineConfig) -> String {
    let json = serde_json::to_vec(&Hashed { dataset: spec, config }).expect("config serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

fn metadata(spec: &DatasetSpec, config: &PipelineConfig, instances: &[Instance]) -> RunMetadata {
    RunMetadata {
        dataset: spec.name,
        variant: spec.variant,
        sampling: spec.sampling,
        sample_size: spec.sample_size,
        dataset_seed: spec.seed,
        backend: config.backend.kind,
        model: config.backend.model.clone(),
        fault_seed: (config.backend.kind == BackendKind::FaultyMock).then_some(config.backend.fault_profile.rng_seed),
        cwa_enabled: config.cwa_enabled,
        config_hash: config_hash(spec, config),
        instance_ids: instances.iter().map(|i| i.id.clone()).collect(),
    }
}

fn threads(options: &RunOptions, config: &PipelineConfig) -> usize {
    let mut n = options
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if let Some(budget) = config.backend.request_budget {
        n = n.min(budget.max(1) as usize);
    }
    n.max(1)
}

/// One pass of the pipeline over `instances`, results sorted by id.
pub fn run_instances(
    instances: &[Instance],
    config: &PipelineConfig,
    spec_name: DatasetName,
    variant: Variant,
    options: &RunOptions,
) -> Result<RunSummary, BenchError> {
    let pipeline = Pipeline::new(config.clone(), options.frontend.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads(options, config))
        .build()
        .map_err(std::io::Error::other)?;
    let outcomes: Vec<_> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| (inst, pipeline.run_instance(inst)))
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    for (inst, out) in &outcomes {
        if let Some(dir) = &options.trace_dir {
            write_trace(dir, &options.run_id, &out.trace)?;
        }
        let answer = out.outcome.answer();
        records.push(InstanceRecord {
            id: inst.id.clone(),
            label: inst.label,
            depth: inst.depth,
            pattern: inst.pattern,
            outcome: out.outcome.clone(),
            correct: answer.is_some() && answer == inst.label,
            query_depth: out.trace.query_depth,
            semantic_iterations: out.trace.semantic_iterations,
            syntax_iterations: out.trace.syntax_iterations,
            backend_calls: out.trace.backend_calls,
        });
    }
    if records
        .iter()
        .any(|r| r.outcome.failure().is_some_and(|f| f.kind == FailureKind::BudgetExceeded))
    {
        let completed = records.iter().filter(|r| r.outcome.failure().is_none()).count();
        return Err(BenchError::BudgetExhausted { completed });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(summarize(config.ablation, spec_name, variant, records))
}

pub fn run_experiment(
    spec: &DatasetSpec,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<ExperimentReport, BenchError> {
    config.validate()?;
    let instances = load_dataset(spec)?;
    let run = run_instances(&instances, config, spec.name, spec.variant, options)?;
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: metadata(spec, config, &instances),
        runs: vec![run],
    })
}

/// The same sample under base, se and se-syn, each with a fresh backend.
pub fn run_ablation(
    spec: &DatasetSpec,
    config: &PipelineConfig,
    options: &RunOptions,
) -> Result<ExperimentReport, BenchError> {
    config.validate()?;
    let instances = load_dataset(spec)?;
    let mut runs = Vec::new();
    for ablation in Ablation::ALL {
        let config = PipelineConfig {
            ablation,
            ..config.clone()
        };
        let options = RunOptions {
            run_id: format!("{}-{ablation}", options.run_id),
            ..options.clone()
        };
        runs.push(run_instances(&instances, &config, spec.name, spec.variant, &options)?);
    }
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: metadata(spec, config, &instances),
        runs,
    })
}

/// Writes `report.json`, `report.md` and `report.csv` into `dir`.
pub fn write_reports(dir: &Path, report: &ExperimentReport) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for format in [ReportFormat::Json, ReportFormat::Markdown, ReportFormat::Csv] {
        std::fs::write(
            dir.join(format!("report.{}", format.extension())),
            emit_report(report, format),
        )?;
    }
    Ok(())
}
