use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::{DatasetName, Sampling, Variant};
use crate::llm::BackendKind;
use crate::nl::Pattern;
use crate::pipeline::{Ablation, FailureKind, Outcome};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// JSON schema of [`ExperimentReport`] documents.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub label: Option<bool>,
    pub depth: Option<u32>,
    pub pattern: Pattern,
    pub outcome: Outcome,
    pub correct: bool,
    pub query_depth: Option<u32>,
    pub semantic_iterations: u32,
    pub syntax_iterations: u32,
    pub backend_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// `Depth=N` or a variant title.
    pub label: String,
    pub attempted: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub failed: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: usize,
    pub denominator: usize,
    pub value: f64,
}

impl Fraction {
    pub fn new(numerator: usize, denominator: usize) -> Self {
        let value = if denominator == 0 {
            0.0
        } else {
            numerator as f64 / denominator as f64
        };
        Fraction {
            numerator,
            denominator,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub ablation: Ablation,
    pub cells: Vec<Cell>,
    /// Unweighted mean of the cell accuracies.
    pub total: f64,
    pub accuracy: Fraction,
    pub executability: Fraction,
    pub failures: BTreeMap<FailureKind, usize>,
    pub backend_calls: u64,
    pub results: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset: DatasetName,
    pub variant: Variant,
    pub sampling: Sampling,
    pub sample_size: usize,
    pub dataset_seed: u64,
    pub backend: BackendKind,
    pub model: String,
    pub fault_seed: Option<u64>,
    pub cwa_enabled: bool,
    pub config_hash: String,
    pub instance_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub metadata: RunMetadata,
    pub runs: Vec<RunSummary>,
}

impl ExperimentReport {
    pub fn run(&self, ablation: Ablation) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.ablation == ablation)
    }

    pub fn executability(&self) -> BTreeMap<Ablation, f64> {
        self.runs.iter().map(|r| (r.ablation, r.executability.value)).collect()
    }
}

pub fn cell_label(dataset: DatasetName, variant: Variant, depth: Option<u32>) -> String {
    match (dataset.by_depth(), depth) {
        (true, Some(d)) => format!("Depth={d}"),
        (true, None) => "Depth=?".to_string(),
        (false, _) => variant.title().to_string(),
    }
}

pub fn summarize(
    ablation: Ablation,
    dataset: DatasetName,
    variant: Variant,
    results: Vec<InstanceRecord>,
) -> RunSummary {
    let mut cells: BTreeMap<String, Cell> = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for r in &results {
        let label = cell_label(dataset, variant, r.depth);
        let cell = cells.entry(label.clone()).or_insert_with(|| Cell {
            label,
            attempted: 0,
            correct: 0,
            incorrect: 0,
            failed: 0,
            accuracy: 0.0,
        });
        cell.attempted += 1;
        match &r.outcome {
            Outcome::Failure(f) => {
                cell.failed += 1;
                *failures.entry(f.kind).or_insert(0) += 1;
            }
            Outcome::Answer { .. } if r.correct => cell.correct += 1,
            Outcome::Answer { .. } => cell.incorrect += 1,
        }
    }
    let cells: Vec<Cell> = cells
        .into_values()
        .map(|c| Cell {
            accuracy: Fraction::new(c.correct, c.attempted).value,
            ..c
        })
        .collect();
    let total = if cells.is_empty() {
        0.0
    } else {
        cells.iter().map(|c| c.accuracy).sum::<f64>() / cells.len() as f64
    };
    let correct = results.iter().filter(|r| r.correct).count();
    let executable = results.iter().filter(|r| r.outcome.answer().is_some()).count();
    RunSummary {
        ablation,
        cells,
        total,
        accuracy: Fraction::new(correct, results.len()),
        executability: Fraction::new(executable, results.len()),
        failures,
        backend_calls: results.iter().map(|r| r.backend_calls).sum(),
        results,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            "markdown" | "md" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

/// At most four decimals, trailing zeros dropped: 0.5275, 0.5, 1.
pub fn number(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn method(ablation: Ablation) -> &'static str {
    match ablation {
        Ablation::Base => "Base",
        Ablation::Se => "ChatLogic (SE only)",
        Ablation::SeSyn => "ChatLogic",
    }
}

fn model(meta: &RunMetadata) -> String {
    match meta.backend {
        BackendKind::Live => meta.model.clone(),
        kind => format!("{} ({kind})", meta.model),
    }
}

fn markdown(report: &ExperimentReport) -> String {
    let meta = &report.metadata;
    let mut out = String::new();
    let variant = match meta.variant {
        Variant::NotApplicable => String::new(),
        v => format!("{}, ", v.title()),
    };
    let _ = writeln!(
        out,
        "# {} ({variant}{} instances, {} sampling, seed {})\n",
        meta.dataset,
        meta.instance_ids.len(),
        meta.sampling.as_str(),
        meta.dataset_seed
    );

    let mut labels: Vec<String> = Vec::new();
    for run in &report.runs {
        for c in &run.cells {
            if !labels.contains(&c.label) {
                labels.push(c.label.clone());
            }
        }
    }
    labels.sort();
    let _ = writeln!(out, "## Accuracy\n");
    let _ = writeln!(out, "| Model | Method | {} | Total |", labels.join(" | "));
    let _ = writeln!(out, "|---|---|{}---|", "---|".repeat(labels.len()));
    for run in &report.runs {
        let values: Vec<String> = labels
            .iter()
            .map(|l| {
                run.cells
                    .iter()
                    .find(|c| &c.label == l)
                    .map_or("-".to_string(), |c| number(c.accuracy))
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            model(meta),
            method(run.ablation),
            values.join(" | "),
            number(run.total)
        );
    }

    let _ = writeln!(out, "\n## Executability\n");
    let titles: Vec<&str> = report.runs.iter().map(|r| r.ablation.title()).collect();
    let _ = writeln!(out, "| Model | Dataset | {} |", titles.join(" | "));
    let _ = writeln!(out, "|---|---|{}", "---|".repeat(titles.len()));
    let values: Vec<String> = report.runs.iter().map(|r| number(r.executability.value)).collect();
    let _ = writeln!(out, "| {} | {} | {} |", model(meta), meta.dataset, values.join(" | "));

    let mut failures: BTreeMap<(FailureKind, Ablation), usize> = BTreeMap::new();
    for run in &report.runs {
        for (kind, n) in &run.failures {
            failures.insert((*kind, run.ablation), *n);
        }
    }
    if !failures.is_empty() {
        let _ = writeln!(out, "\n## Failures\n");
        let _ = writeln!(out, "| Kind | {} |", titles.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(titles.len()));
        let kinds: Vec<FailureKind> = {
            let mut k: Vec<FailureKind> = failures.keys().map(|(k, _)| *k).collect();
            k.dedup();
            k
        };
        for kind in kinds {
            let counts: Vec<String> = report
                .runs
                .iter()
                .map(|r| failures.get(&(kind, r.ablation)).copied().unwrap_or(0).to_string())
                .collect();
            let _ = writeln!(out, "| {kind} | {} |", counts.join(" | "));
        }
    }
    out
}

fn csv(report: &ExperimentReport) -> String {
    let mut out = String::from("ablation,cell,attempted,correct,incorrect,failed,accuracy\n");
    for run in &report.runs {
        for c in &run.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                run.ablation,
                c.label,
                c.attempted,
                c.correct,
                c.incorrect,
                c.failed,
                number(c.accuracy)
            );
        }
        let sum = |f: fn(&Cell) -> usize| run.cells.iter().map(f).sum::<usize>();
        let _ = writeln!(
            out,
            "{},Total,{},{},{},{},{}",
            run.ablation,
            sum(|c| c.attempted),
            sum(|c| c.correct),
            sum(|c| c.incorrect),
            sum(|c| c.failed),
            number(run.total)
        );
    }
    out
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => csv(report),
        ReportFormat::Markdown => markdown(report),
    }
}
