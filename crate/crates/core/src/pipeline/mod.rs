//! The translate, self-correct, execute loop for one instance.
//!
//! 1. closed-world supplements for meta attributes (optional);
//! 2. translation of the sentences into a program;
//! 3. semantic correction: back-translate, compare with the original
//!    sentences, and retranslate while they differ;
//! 4. syntax correction: feed parser and engine errors back for repair,
//!    bounded by an iteration count and a wall-clock limit;
//! 5. local evaluation of the final program.

mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{parse_program, parse_statements, render_diagnostics, GRAMMAR};
use crate::llm::{build_backend, BackendConfig, ChatRequest, LlmBackend, LlmError, TaskTag};
use crate::logic::{evaluate, LogicError, Model, Program};
use crate::nl::{Comparison, Instance, NlFrontend};
use crate::prompt::{extract_verdict, PromptSet, Verdict};

pub use trace::{file_stem, write_trace, Phase, PhaseTimings, Step, TranslationTrace, TRACE_SCHEMA_VERSION};

use crate::llm::RETRY_PREFIX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Llm,
    Deterministic,
}

/// Which correction loops run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    Base,
    Se,
    SeSyn,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::Base, Ablation::Se, Ablation::SeSyn];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Base => "base",
            Ablation::Se => "se",
            Ablation::SeSyn => "se-syn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Ablation::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// Column title in ablation tables.
    pub fn title(self) -> &'static str {
        match self {
            Ablation::Base => "Base",
            Ablation::Se => "SE",
            Ablation::SeSyn => "SE+SYN",
        }
    }

    pub fn semantic(self) -> bool {
        self >= Ablation::Se
    }

    pub fn syntax(self) -> bool {
        self == Ablation::SeSyn
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendConfig,
    pub max_semantic_iterations: u32,
    pub max_syntax_iterations: u32,
    /// Seconds; checked before every repair.
    pub per_instance_timeout: f64,
    pub comparator: Comparator,
    pub cwa_enabled: bool,
    pub ablation: Ablation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            backend: BackendConfig::default(),
            max_semantic_iterations: 3,
            max_syntax_iterations: 3,
            per_instance_timeout: 60.0,
            comparator: Comparator::Deterministic,
            cwa_enabled: true,
            ablation: Ablation::SeSyn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_semantic_iterations == 0 {
            return Err(ConfigError::NotPositive("max_semantic_iterations"));
        }
        if self.max_syntax_iterations == 0 {
            return Err(ConfigError::NotPositive("max_syntax_iterations"));
        }
        if self.per_instance_timeout.is_nan() || self.per_instance_timeout <= 0.0 {
            return Err(ConfigError::NotPositive("per_instance_timeout"));
        }
        self.backend.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    /// The reply contains nothing that looks like a literal.
    Untranslatable,
    /// Parse errors with repairs disabled.
    Unparseable,
    UnparseableAfterRepair,
    Unstratifiable,
    Inconsistent,
    Timeout,
    BudgetExceeded,
    /// Transport, authentication or response-shape errors from the backend.
    Backend,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::Untranslatable => "untranslatable",
            FailureKind::Unparseable => "unparseable",
            FailureKind::UnparseableAfterRepair => "unparseable-after-repair",
            FailureKind::Unstratifiable => "unstratifiable",
            FailureKind::Inconsistent => "inconsistent",
            FailureKind::Timeout => "timeout",
            FailureKind::BudgetExceeded => "budget-exceeded",
            FailureKind::Backend => "backend",
        }
    }
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub detail: String,
}

impl Failure {
    fn new(kind: FailureKind, detail: impl Into<String>) -> Self {
        Failure {
            kind,
            detail: detail.into(),
        }
    }

    fn from_backend(error: LlmError) -> Self {
        let kind = match error {
            LlmError::BudgetExceeded { .. } => FailureKind::BudgetExceeded,
            _ => FailureKind::Backend,
        };
        Failure::new(kind, error.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Answer { value: bool },
    Failure(Failure),
}

impl Outcome {
    pub fn answer(&self) -> Option<bool> {
        match self {
            Outcome::Answer { value } => Some(*value),
            Outcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            Outcome::Failure(f) => Some(f),
            Outcome::Answer { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub outcome: Outcome,
    pub trace: TranslationTrace,
}

/// A program that executed to an answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub program: Program,
    pub model: Model,
    pub answer: bool,
}

impl Execution {
    /// Round at which the query's witness was derived; `None` when a
    /// negative query holds only by the closed-world assumption.
    pub fn query_depth(&self) -> Option<u32> {
        if !self.answer {
            return None;
        }
        self.model.depth(self.program.query())
    }
}

fn logic_failure(error: LogicError) -> Failure {
    match error {
        LogicError::Unstratifiable { .. } => Failure::new(FailureKind::Unstratifiable, error.to_string()),
        LogicError::Inconsistency { .. } => Failure::new(FailureKind::Inconsistent, error.to_string()),
        other => Failure::new(FailureKind::Unparseable, other.to_string()),
    }
}

/// Parses and evaluates program text without supplements.
pub fn execute_final(text: &str) -> Result<Execution, Failure> {
    let program = parse_program(text).map_err(|diags| {
        let kind = if parse_statements(text).0.is_empty() && !text.contains('(') {
            FailureKind::Untranslatable
        } else {
            FailureKind::Unparseable
        };
        Failure::new(kind, render_diagnostics(&diags))
    })?;
    let model = evaluate(&program).map_err(logic_failure)?;
    let answer = model.holds(program.query());
    Ok(Execution {
        program,
        model,
        answer,
    })
}

/// Sentences of an instance as the program's back-translation should read:
/// facts, rules, supplements, then the question ending in `?`.
pub fn original_sentences(instance: &Instance, supplements: &[String]) -> Vec<String> {
    let question = instance.question.trim().trim_end_matches(['.', '?']);
    instance
        .facts
        .iter()
        .chain(&instance.rules)
        .chain(supplements)
        .cloned()
        .chain(std::iter::once(format!("{question}?")))
        .collect()
}

fn slots(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn lines(reply: &str) -> Vec<String> {
    reply
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgement {
    pub same: bool,
    pub detail: String,
}

pub struct Pipeline {
    config: PipelineConfig,
    backend: Arc<dyn LlmBackend>,
    prompts: PromptSet,
    frontend: NlFrontend,
}

/// Per-instance state: the trace being appended and the phase clock.
struct Session<'a> {
    pipeline: &'a Pipeline,
    trace: TranslationTrace,
}

impl Session<'_> {
    fn call(
        &mut self,
        phase: Phase,
        iteration: u32,
        tag: TaskTag,
        slots: &BTreeMap<String, String>,
    ) -> Result<String, Failure> {
        let messages = self
            .pipeline
            .prompts
            .render(tag, slots)
            .map_err(|e| Failure::new(FailureKind::Backend, e.to_string()))?;
        let request = ChatRequest::new(self.pipeline.config.backend.model.clone(), messages);
        let result = self.pipeline.backend.complete(&request);
        match &result {
            Err(LlmError::BudgetExceeded { .. }) | Err(LlmError::UnknownTask) => {}
            _ => self.trace.push(Step::Exchange {
                phase,
                iteration,
                prompt: tag,
                request: request.messages,
                reply: result.as_ref().ok().cloned(),
                error: result.as_ref().err().map(ToString::to_string),
            }),
        }
        result.map_err(Failure::from_backend)
    }

    fn judge(&mut self, iteration: u32, original: &[String], roundtrip: &[String]) -> Result<Judgement, Failure> {
        match self.pipeline.config.comparator {
            Comparator::Deterministic => Ok(match self.pipeline.frontend.canonical_compare(original, roundtrip) {
                Comparison::Same => Judgement {
                    same: true,
                    detail: String::new(),
                },
                Comparison::Different(detail) => Judgement { same: false, detail },
            }),
            Comparator::Llm => {
                let analysis = self.call(
                    Phase::Semantic,
                    iteration,
                    TaskTag::CompareStep1,
                    &slots(&[
                        ("original_sentences", &original.join("\n")),
                        ("roundtrip_sentences", &roundtrip.join("\n")),
                    ]),
                )?;
                let reply = self.call(
                    Phase::Semantic,
                    iteration,
                    TaskTag::CompareStep2,
                    &slots(&[("step1_analysis", &analysis)]),
                )?;
                let same = match extract_verdict(&reply) {
                    Ok(v) => v == Verdict::Same,
                    Err(e) => {
                        warn!("{e}; treating the verdict as DIFFERENT");
                        false
                    }
                };
                Ok(Judgement { same, detail: analysis })
            }
        }
    }

    fn run(&mut self, instance: &Instance) -> Result<Execution, Failure> {
        let config = &self.pipeline.config;
        let started = Instant::now();

        let supplements = if config.cwa_enabled {
            self.pipeline.supplements(instance)
        } else {
            Vec::new()
        };
        self.trace.supplements = supplements.clone();
        self.trace.timings.supplement_ms = ms(started);

        let phase_start = Instant::now();
        let original = original_sentences(instance, &supplements);
        let facts = instance.facts.join("\n");
        let rules = instance.rules.join("\n");
        let supplement_text = supplements.join("\n");
        let max_semantic = if config.ablation.semantic() {
            config.max_semantic_iterations
        } else {
            1
        };
        let mut feedback = String::new();
        let mut candidate = String::new();
        for iteration in 1..=max_semantic {
            candidate = self.call(
                Phase::Semantic,
                iteration,
                TaskTag::Translate,
                &slots(&[
                    ("facts", &facts),
                    ("rules", &rules),
                    ("question", &instance.question),
                    ("supplements", &supplement_text),
                    ("dsl_grammar", GRAMMAR),
                    ("feedback", &feedback),
                ]),
            )?;
            self.trace.semantic_iterations = iteration;
            if !config.ablation.semantic() {
                break;
            }
            let back = self.call(
                Phase::Semantic,
                iteration,
                TaskTag::BackTranslate,
                &slots(&[("program_text", &candidate)]),
            )?;
            let judgement = self.judge(iteration, &original, &lines(&back))?;
            self.trace.push(Step::Verdict {
                iteration,
                same: judgement.same,
                detail: judgement.detail.clone(),
            });
            if judgement.same {
                break;
            }
            if iteration == max_semantic {
                debug!("{}: semantic iterations exhausted, keeping the last candidate", instance.id);
            }
            feedback = format!(
                "\n<feedback>\n{RETRY_PREFIX} {iteration}\nThe previous translation did not match the problem:\n{}\n</feedback>",
                judgement.detail.trim()
            );
        }
        self.trace.timings.semantic_ms = ms(phase_start);

        let phase_start = Instant::now();
        let mut repairs = 0;
        let result = loop {
            match execute_final(&candidate) {
                Ok(execution) => break Ok(execution),
                Err(failure) if !config.ablation.syntax() => break Err(failure),
                Err(failure) => {
                    if repairs >= config.max_syntax_iterations {
                        let kind = match failure.kind {
                            FailureKind::Unparseable => FailureKind::UnparseableAfterRepair,
                            other => other,
                        };
                        break Err(Failure::new(kind, failure.detail));
                    }
                    if started.elapsed().as_secs_f64() > config.per_instance_timeout {
                        break Err(Failure::new(
                            FailureKind::Timeout,
                            format!("exceeded {} s with {} repairs", config.per_instance_timeout, repairs),
                        ));
                    }
                    repairs += 1;
                    self.trace.push(Step::Diagnostics {
                        iteration: repairs,
                        program: candidate.clone(),
                        diagnostics: failure.detail.clone(),
                    });
                    candidate = match self.call(
                        Phase::Syntax,
                        repairs,
                        TaskTag::Repair,
                        &slots(&[("program_text", &candidate), ("diagnostics", &failure.detail)]),
                    ) {
                        Ok(reply) => reply,
                        Err(f) => break Err(f),
                    };
                    self.trace.syntax_iterations = repairs;
                }
            }
        };
        self.trace.timings.syntax_ms = ms(phase_start);
        self.trace.final_program = Some(candidate);
        result
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

impl Pipeline {
    /// Builds the backend from `config.backend`, with builtin templates.
    pub fn new(config: PipelineConfig, frontend: NlFrontend) -> Result<Self, ConfigError> {
        config.validate()?;
        let backend = build_backend(&config.backend, frontend.clone())?;
        Ok(Pipeline::with_backend(config, backend, frontend, PromptSet::builtin()))
    }

    pub fn with_backend(
        config: PipelineConfig,
        backend: Arc<dyn LlmBackend>,
        frontend: NlFrontend,
        prompts: PromptSet,
    ) -> Self {
        Pipeline {
            config,
            backend,
            prompts,
            frontend,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn backend(&self) -> &Arc<dyn LlmBackend> {
        &self.backend
    }

    pub fn frontend(&self) -> &NlFrontend {
        &self.frontend
    }

    /// Closed-world supplements rendered as sentences. They are computed
    /// from the deterministic reading of the instance; sentences outside
    /// that grammar yield no supplements.
    pub fn supplements(&self, instance: &Instance) -> Vec<String> {
        match self.frontend.translate_instance(instance) {
            Ok(program) => crate::cwa::analyze(&program)
                .added
                .iter()
                .map(|l| self.frontend.render_fact(l))
                .collect(),
            Err(e) => {
                warn!("{}: no closed-world supplements: {e}", instance.id);
                Vec::new()
            }
        }
    }

    pub fn judge_similarity(&self, original: &[String], roundtrip: &[String]) -> Result<Judgement, Failure> {
        let mut session = Session {
            pipeline: self,
            trace: TranslationTrace::new(""),
        };
        session.judge(1, original, roundtrip)
    }

    /// Runs every phase; failures become outcomes, never errors.
    pub fn run_instance(&self, instance: &Instance) -> InstanceOutcome {
        let mut session = Session {
            pipeline: self,
            trace: TranslationTrace::new(&instance.id),
        };
        let result = session.run(instance);
        let mut trace = session.trace;
        let execute_start = Instant::now();
        let outcome = match result {
            Ok(execution) => {
                trace.query_depth = execution.query_depth();
                Outcome::Answer {
                    value: execution.answer,
                }
            }
            Err(failure) => Outcome::Failure(failure),
        };
        trace.timings.execute_ms = ms(execute_start);
        trace.outcome = Some(outcome.clone());
        InstanceOutcome { outcome, trace }
    }
}
