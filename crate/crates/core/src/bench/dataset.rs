//! Dataset specifications, corpus adapters and seeded sampling.
//!
//! Corpus files are JSON lines. Every `*.jsonl` file under the dataset
//! directory is pooled regardless of split. A record carries:
//!
//! * `id` (string or number, required);
//! * `context` (one string of sentences) or `facts`/`rules` (string lists);
//! * either `question` plus `label`, or `questions`: a list of objects with
//!   `text` (or `question`), `label` and an optional `id`;
//! * optional `depth` and `pattern` (`people`/`animal`).
//!
//! Labels may be booleans, `"true"`/`"false"` strings, or 0/1. Missing depth
//! and pattern are taken from directory names such as `Depth3/Animal`.
//! Unknown fields are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::generate::generate_instances;
use crate::nl::{Instance, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetName {
    PararulePlus,
    ConceptrulesV1,
    ConceptrulesV2,
    Generated,
}

impl DatasetName {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::PararulePlus => "pararule-plus",
            DatasetName::ConceptrulesV1 => "conceptrules-v1",
            DatasetName::ConceptrulesV2 => "conceptrules-v2",
            DatasetName::Generated => "generated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            DatasetName::PararulePlus,
            DatasetName::ConceptrulesV1,
            DatasetName::ConceptrulesV2,
            DatasetName::Generated,
        ]
        .into_iter()
        .find(|d| d.as_str() == s)
    }

    /// Accuracy is broken down by depth rather than by variant.
    pub fn by_depth(self) -> bool {
        matches!(self, DatasetName::PararulePlus | DatasetName::Generated)
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Simplified,
    Full,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "simplified" => Some(Variant::Simplified),
            "full" => Some(Variant::Full),
            "n/a" | "na" | "none" => Some(Variant::NotApplicable),
            _ => None,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Variant::Simplified => "Simplified",
            Variant::Full => "Full",
            Variant::NotApplicable => "All",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Equal draws per depth and per People/Animal pattern.
    Stratified,
    /// Draws from the whole pool with no ordering by depth.
    Unstratified,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::Stratified => "stratified",
            Sampling::Unstratified => "unstratified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub name: DatasetName,
    #[serde(default = "DatasetSpec::default_variant")]
    pub variant: Variant,
    #[serde(default)]
    pub path: Option<PathBuf>,
    pub sample_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub depth_filter: Option<BTreeSet<u32>>,
    #[serde(default = "DatasetSpec::default_sampling")]
    pub sampling: Sampling,
}

impl DatasetSpec {
    fn default_variant() -> Variant {
        Variant::NotApplicable
    }

    fn default_sampling() -> Sampling {
        Sampling::Stratified
    }

    pub fn generated(sample_size: usize, seed: u64) -> Self {
        DatasetSpec {
            name: DatasetName::Generated,
            variant: Variant::NotApplicable,
            path: None,
            sample_size,
            seed,
            depth_filter: Some((2..=5).collect()),
            sampling: Sampling::Stratified,
        }
    }

    fn depths(&self) -> Vec<u32> {
        self.depth_filter
            .clone()
            .unwrap_or_else(|| (2..=5).collect())
            .into_iter()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("{file}:{line}: {reason}")]
    Format { file: String, line: usize, reason: String },
    #[error("wanted {wanted} instances{cell} but only {available} are available")]
    InsufficientSamples {
        wanted: usize,
        available: usize,
        cell: String,
    },
    #[error("{0}")]
    Spec(String),
}

fn format_error(file: &Path, line: usize, reason: impl Into<String>) -> DatasetError {
    DatasetError::Format {
        file: file.display().to_string(),
        line,
        reason: reason.into(),
    }
}

fn label(value: &Value) -> Option<bool> {
    match value {
        Value::Bool(b) => Some(*b),
        Value::String(s) => match s.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => None,
        },
        Value::Number(n) => match n.as_u64() {
            Some(1) => Some(true),
            Some(0) => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn text_id(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn path_depth(path: &Path) -> Option<u32> {
    path.components().rev().find_map(|c| {
        let name = c.as_os_str().to_string_lossy().to_ascii_lowercase();
        let rest = name.strip_prefix("depth")?;
        rest.trim_start_matches(['-', '_', '=']).get(..1)?.parse().ok()
    })
}

fn path_pattern(path: &Path) -> Pattern {
    for c in path.components().rev() {
        let name = c.as_os_str().to_string_lossy().to_ascii_lowercase();
        if name.contains("animal") {
            return Pattern::Animal;
        }
        if name.contains("people") || name.contains("person") {
            return Pattern::People;
        }
    }
    Pattern::Other
}

fn split_context(context: &str) -> (Vec<String>, Vec<String>) {
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    for sentence in context.split('.').map(str::trim).filter(|s| !s.is_empty()) {
        let lower = sentence.to_ascii_lowercase();
        let s = format!("{sentence}.");
        if lower.starts_with("if ") || lower.starts_with("all ") {
            rules.push(s);
        } else {
            facts.push(s);
        }
    }
    (facts, rules)
}

fn strings(value: &Value) -> Option<Vec<String>> {
    value
        .as_array()?
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect()
}

/// Instances of one corpus record.
pub fn parse_record(file: &Path, line: usize, record: &Value) -> Result<Vec<Instance>, DatasetError> {
    let err = |reason: &str| format_error(file, line, reason);
    let id = record.get("id").and_then(text_id).ok_or_else(|| err("record has no `id`"))?;
    let err = |reason: String| format_error(file, line, format!("record {id}: {reason}"));

    let (facts, rules) = if let Some(context) = record.get("context") {
        split_context(context.as_str().ok_or_else(|| err("`context` is not a string".into()))?)
    } else {
        let list = |key: &str| match record.get(key) {
            None => Ok(Vec::new()),
            Some(v) => strings(v).ok_or_else(|| err(format!("`{key}` is not a list of strings"))),
        };
        (list("facts")?, list("rules")?)
    };

    let depth = match record.get("depth") {
        Some(v) => Some(
            v.as_u64()
                .map(|d| d as u32)
                .ok_or_else(|| err("`depth` is not an integer".into()))?,
        ),
        None => path_depth(file),
    };
    let pattern = match record.get("pattern").and_then(Value::as_str) {
        Some("people") => Pattern::People,
        Some("animal") => Pattern::Animal,
        Some(_) => Pattern::Other,
        None => path_pattern(file),
    };

    let make = |qid: String, question: &Value, gold: Option<&Value>| -> Result<Instance, DatasetError> {
        let question = question
            .as_str()
            .ok_or_else(|| err(format!("question {qid} is not a string")))?;
        let gold = gold.ok_or_else(|| err(format!("question {qid} has no `label`")))?;
        let label = label(gold).ok_or_else(|| err(format!("question {qid} has an unreadable label {gold}")))?;
        Ok(Instance {
            id: qid,
            facts: facts.clone(),
            rules: rules.clone(),
            question: question.to_string(),
            label: Some(label),
            depth,
            pattern,
        })
    };

    if let Some(questions) = record.get("questions") {
        let questions = questions.as_array().ok_or_else(|| err("`questions` is not a list".into()))?;
        questions
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let qid = q
                    .get("id")
                    .and_then(text_id)
                    .unwrap_or_else(|| format!("{id}-{}", i + 1));
                let text = q
                    .get("text")
                    .or_else(|| q.get("question"))
                    .ok_or_else(|| err(format!("question {qid} has no `text`")))?;
                make(qid, text, q.get("label"))
            })
            .collect()
    } else {
        let question = record.get("question").ok_or_else(|| err("record has no `question`".into()))?;
        Ok(vec![make(id.clone(), question, record.get("label"))?])
    }
}

fn jsonl_files(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            jsonl_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            out.push(path);
        }
    }
    Ok(())
}

/// Every instance of every split under `dir`, sorted by id.
pub fn load_pool(dir: &Path, variant: Variant) -> Result<Vec<Instance>, DatasetError> {
    let mut files = Vec::new();
    jsonl_files(dir, &mut files).map_err(|e| format_error(dir, 0, e.to_string()))?;
    files.sort();
    if variant != Variant::NotApplicable {
        let wanted = variant.title().to_ascii_lowercase();
        files.retain(|f| {
            f.strip_prefix(dir)
                .unwrap_or(f)
                .to_string_lossy()
                .to_ascii_lowercase()
                .contains(&wanted)
        });
    }
    let mut pool = Vec::new();
    for file in &files {
        let text = std::fs::read_to_string(file).map_err(|e| format_error(file, 0, e.to_string()))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Value = serde_json::from_str(line)
                .map_err(|e| format_error(file, i + 1, format!("invalid JSON: {e}")))?;
            pool.extend(parse_record(file, i + 1, &record)?);
        }
    }
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool.dedup_by(|a, b| a.id == b.id);
    Ok(pool)
}

fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| total / parts + usize::from(i < total % parts))
        .collect()
}

fn draw(
    rng: &mut ChaCha8Rng,
    mut candidates: Vec<Instance>,
    wanted: usize,
    cell: String,
) -> Result<Vec<Instance>, DatasetError> {
    if candidates.len() < wanted {
        return Err(DatasetError::InsufficientSamples {
            wanted,
            available: candidates.len(),
            cell,
        });
    }
    candidates.shuffle(rng);
    candidates.truncate(wanted);
    Ok(candidates)
}

/// Samples `spec.sample_size` instances, sorted by id.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Vec<Instance>, DatasetError> {
    let depths = spec.depths();
    if depths.iter().any(|d| !(2..=5).contains(d)) {
        return Err(DatasetError::Spec("depth_filter must be a subset of {2, 3, 4, 5}".into()));
    }
    let mut sample = if spec.name == DatasetName::Generated {
        generated(spec, &depths)
    } else {
        let dir = spec
            .path
            .as_deref()
            .ok_or_else(|| DatasetError::Spec(format!("dataset {} needs a path", spec.name)))?;
        if !dir.is_dir() {
            return Err(DatasetError::Spec(format!("{} is not a directory", dir.display())));
        }
        let mut pool = load_pool(dir, spec.variant)?;
        if let Some(filter) = &spec.depth_filter {
            pool.retain(|i| i.depth.is_some_and(|d| filter.contains(&d)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        if spec.name == DatasetName::PararulePlus && spec.sampling == Sampling::Stratified && spec.depth_filter.is_some() {
            let mut cells: BTreeMap<(u32, Pattern), Vec<Instance>> = BTreeMap::new();
            for inst in pool {
                cells.entry((inst.depth.unwrap_or(0), inst.pattern)).or_default().push(inst);
            }
            let keys: Vec<(u32, Pattern)> = depths
                .iter()
                .flat_map(|&d| [(d, Pattern::People), (d, Pattern::Animal)])
                .collect();
            let counts = split_evenly(spec.sample_size, keys.len());
            let mut sample = Vec::new();
            for (key, wanted) in keys.into_iter().zip(counts) {
                let candidates = cells.remove(&key).unwrap_or_default();
                let cell = format!(" at depth {} ({})", key.0, key.1);
                sample.extend(draw(&mut rng, candidates, wanted, cell)?);
            }
            sample
        } else {
            draw(&mut rng, pool, spec.sample_size, String::new())?
        }
    };
    sample.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(sample)
}

fn generated(spec: &DatasetSpec, depths: &[u32]) -> Vec<Instance> {
    let cells: Vec<(u32, Pattern)> = depths
        .iter()
        .flat_map(|&d| [(d, Pattern::People), (d, Pattern::Animal)])
        .collect();
    let counts = split_evenly(spec.sample_size, cells.len());
    cells
        .into_iter()
        .zip(counts)
        .flat_map(|((depth, pattern), count)| {
            let pattern_code = if pattern == Pattern::People { 1 } else { 2 };
            let seed = spec
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(u64::from(depth) * 16 + pattern_code);
            generate_instances(seed, count, depth, pattern)
        })
        .collect()
}
