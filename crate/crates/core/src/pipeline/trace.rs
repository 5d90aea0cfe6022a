use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::llm::{ChatMessage, TaskTag};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Semantic,
    Syntax,
}

/// One entry of the append-only step log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Step {
    Exchange {
        phase: Phase,
        iteration: u32,
        prompt: TaskTag,
        request: Vec<ChatMessage>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reply: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Verdict {
        iteration: u32,
        same: bool,
        detail: String,
    },
    Diagnostics {
        iteration: u32,
        program: String,
        diagnostics: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub supplement_ms: f64,
    pub semantic_ms: f64,
    pub syntax_ms: f64,
    pub execute_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTrace {
    pub schema_version: u32,
    pub instance_id: String,
    pub supplements: Vec<String>,
    pub steps: Vec<Step>,
    pub final_program: Option<String>,
    pub outcome: Option<Outcome>,
    pub query_depth: Option<u32>,
    pub semantic_iterations: u32,
    pub syntax_iterations: u32,
    pub backend_calls: u64,
    pub timings: PhaseTimings,
}

impl TranslationTrace {
    pub(super) fn new(instance_id: &str) -> Self {
        TranslationTrace {
            schema_version: TRACE_SCHEMA_VERSION,
            instance_id: instance_id.to_string(),
            supplements: Vec::new(),
            steps: Vec::new(),
            final_program: None,
            outcome: None,
            query_depth: None,
            semantic_iterations: 0,
            syntax_iterations: 0,
            backend_calls: 0,
            timings: PhaseTimings::default(),
        }
    }

    pub(super) fn push(&mut self, step: Step) {
        if matches!(step, Step::Exchange { .. }) {
            self.backend_calls += 1;
        }
        self.steps.push(step);
    }

    pub fn exchanges(&self) -> impl Iterator<Item = &Step> {
        self.steps.iter().filter(|s| matches!(s, Step::Exchange { .. }))
    }
}

/// File-system safe form of an instance id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

/// Writes `<dir>/<run_id>/<instance-id>.trace.json`.
pub fn write_trace(dir: &Path, run_id: &str, trace: &TranslationTrace) -> io::Result<PathBuf> {
    let run_dir = dir.join(file_stem(run_id));
    std::fs::create_dir_all(&run_dir)?;
    let path = run_dir.join(format!("{}.trace.json", file_stem(&trace.instance_id)));
    let json = serde_json::to_string_pretty(trace).map_err(io::Error::other)?;
    std::fs::write(&path, json + "\n")?;
    Ok(path)
}
