use std::collections::HashMap;
use std::sync::Mutex;

use super::fault::{corrupt, FaultProfile};
use super::{classify_request, BackendKind, Budget, ChatRequest, LlmBackend, LlmError, TaskTag};
use crate::dsl::{format_program, parse_statements};
use crate::nl::{Instance, NlFrontend};
use crate::prompt::{extract_section, extract_verdict, Verdict};

/// Line in the translate feedback section carrying the retranslation count.
pub const RETRY_PREFIX: &str = "retry:";

/// A reply previously emitted for an exchange, remembered so that a repair
/// prompt quoting it can be continued.
#[derive(Debug, Clone)]
struct Emission {
    exchange: String,
    /// Correction prompts answered before this reply.
    index: u32,
    /// The reply before syntax corruption.
    semantic_text: String,
}

/// Answers every task with the deterministic oracle. The faulty variant then
/// corrupts translations and repairs according to its profile.
pub struct MockBackend {
    frontend: NlFrontend,
    faults: Option<FaultProfile>,
    budget: Budget,
    emitted: Mutex<HashMap<String, Emission>>,
}

fn normalize(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

fn section(content: &str, name: &str) -> Result<Vec<String>, LlmError> {
    extract_section(content, name)
        .ok_or_else(|| LlmError::MalformedResponse(format!("request lacks a <{name}> section")))
}

impl MockBackend {
    pub fn perfect(frontend: NlFrontend, budget: Option<u64>) -> Self {
        MockBackend {
            frontend,
            faults: None,
            budget: Budget::new(budget),
            emitted: Mutex::new(HashMap::new()),
        }
    }

    pub fn faulty(frontend: NlFrontend, profile: FaultProfile, budget: Option<u64>) -> Self {
        MockBackend {
            faults: Some(profile),
            ..MockBackend::perfect(frontend, budget)
        }
    }

    fn remember(&self, text: &str, emission: Emission) {
        self.emitted
            .lock()
            .expect("registry lock")
            .insert(normalize(text), emission);
    }

    /// Reply number `index` of an exchange whose correct content is `semantic_text`.
    fn emit(&self, exchange: &str, index: u32, semantic_text: String) -> String {
        let text = match &self.faults {
            Some(profile) => match profile.plan(exchange).syntax {
                Some((kind, salt)) if profile.corrupts(index) => corrupt(&semantic_text, kind, salt),
                _ => semantic_text.clone(),
            },
            None => semantic_text.clone(),
        };
        self.remember(
            &text,
            Emission {
                exchange: exchange.to_string(),
                index,
                semantic_text,
            },
        );
        text
    }

    fn translate(&self, content: &str) -> Result<String, LlmError> {
        let facts = section(content, "facts")?;
        let rules = section(content, "rules")?;
        let question = section(content, "question")?.join(" ");
        let supplements = section(content, "supplements")?;
        let retry: u32 = extract_section(content, "feedback")
            .unwrap_or_default()
            .iter()
            .find_map(|l| l.strip_prefix(RETRY_PREFIX).and_then(|n| n.trim().parse().ok()))
            .unwrap_or(0);

        let exchange = [&facts[..], &rules[..], std::slice::from_ref(&question), &supplements[..]]
            .iter()
            .map(|s| s.join("\n"))
            .collect::<Vec<_>>()
            .join("\n--\n");
        let instance = Instance {
            id: String::new(),
            facts,
            rules,
            question,
            label: None,
            depth: None,
            pattern: Default::default(),
        };
        let clean = match self.frontend.translate_with_supplements(&instance, &supplements) {
            Ok(program) => format_program(&program).text,
            Err(e) => {
                log::debug!("oracle cannot translate: {e}");
                return Ok("I cannot translate this problem.".to_string());
            }
        };
        let semantic_text = match &self.faults {
            Some(profile) => match profile.plan(&exchange).semantic {
                Some((kind, salt)) if profile.corrupts(retry) => corrupt(&clean, kind, salt),
                _ => clean,
            },
            None => clean,
        };
        Ok(self.emit(&exchange, retry, semantic_text))
    }

    fn repair(&self, content: &str) -> Result<String, LlmError> {
        let program = section(content, "program")?.join("\n");
        let previous = self
            .emitted
            .lock()
            .expect("registry lock")
            .get(&normalize(&program))
            .cloned();
        Ok(match previous {
            Some(e) => self.emit(&e.exchange, e.index + 1, e.semantic_text),
            None => program + "\n",
        })
    }

    fn back_translate(&self, content: &str) -> Result<String, LlmError> {
        let program = section(content, "program")?.join("\n");
        let (statements, _) = parse_statements(&program);
        Ok(self
            .frontend
            .back_translate_statements(statements.iter().map(|s| &s.value))
            .join("\n"))
    }

    fn compare_step1(&self, content: &str) -> Result<String, LlmError> {
        let original = section(content, "original")?;
        let roundtrip = section(content, "roundtrip")?;
        Ok(match self.frontend.canonical_compare(&original, &roundtrip) {
            crate::nl::Comparison::Same => {
                "Every statement of the first list has a counterpart in the second and vice versa.\n\
                 Verdict: SAME"
                    .to_string()
            }
            crate::nl::Comparison::Different(detail) => {
                format!("The lists disagree: {detail}\nVerdict: DIFFERENT")
            }
        })
    }

    fn compare_step2(&self, content: &str) -> Result<String, LlmError> {
        let analysis = section(content, "analysis")?.join("\n");
        Ok(match extract_verdict(&analysis) {
            Ok(Verdict::Same) => "SAME".into(),
            _ => "DIFFERENT".into(),
        })
    }
}

impl LlmBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let tag = classify_request(request)?;
        self.budget.acquire()?;
        let content = request.last_user().unwrap_or_default();
        match tag {
            TaskTag::Translate => self.translate(content),
            TaskTag::BackTranslate => self.back_translate(content),
            TaskTag::CompareStep1 => self.compare_step1(content),
            TaskTag::CompareStep2 => self.compare_step2(content),
            TaskTag::Repair => self.repair(content),
        }
    }

    fn calls(&self) -> u64 {
        self.budget.used()
    }

    fn kind(&self) -> BackendKind {
        if self.faults.is_some() {
            BackendKind::FaultyMock
        } else {
            BackendKind::PerfectMock
        }
    }
}
