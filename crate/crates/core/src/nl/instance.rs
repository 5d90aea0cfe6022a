use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NlError, NlFrontend, Sentence};
use crate::logic::Program;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    People,
    Animal,
    #[default]
    Other,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::People => "people",
            Pattern::Animal => "animal",
            Pattern::Other => "other",
        })
    }
}

/// One benchmark problem in natural language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub facts: Vec<String>,
    pub rules: Vec<String>,
    pub question: String,
    /// Gold answer; absent for unlabeled inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default)]
    pub pattern: Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Facts,
    Rules,
    Question,
    Supplements,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceFailure {
    pub section: Section,
    pub index: usize,
    pub sentence: String,
    pub reason: String,
}

impl fmt::Display for SentenceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let section = match self.section {
            Section::Facts => "fact",
            Section::Rules => "rule",
            Section::Question => "question",
            Section::Supplements => "supplement",
        };
        write!(f, "{section} {} {:?}: {}", self.index, self.sentence, self.reason)
    }
}

pub(super) fn translate(
    frontend: &NlFrontend,
    instance: &Instance,
    supplements: &[String],
) -> Result<Program, NlError> {
    let mut failures = Vec::new();
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    let mut fail = |section, index, sentence: &str, reason: String| {
        failures.push(SentenceFailure {
            section,
            index,
            sentence: sentence.to_string(),
            reason,
        })
    };
    let reason = |e: NlError| match e {
        NlError::Unrecognized { reason, .. } => reason,
        other => other.to_string(),
    };

    // Fact and rule sentences are accepted in either list; corpora do not
    // always separate them.
    let sections = [
        (Section::Facts, &instance.facts[..]),
        (Section::Rules, &instance.rules[..]),
        (Section::Supplements, supplements),
    ];
    for (section, sentences) in sections {
        for (index, s) in sentences.iter().enumerate() {
            match frontend.parse_sentence(s) {
                Ok(Sentence::Fact(l)) if l.is_ground() => facts.push(l),
                Ok(Sentence::Fact(_)) => fail(section, index, s, "fact is not ground".into()),
                Ok(Sentence::Rule(r)) => rules.push(r),
                Err(e) => fail(section, index, s, reason(e)),
            }
        }
    }
    let query = match frontend.parse_sentence(&instance.question) {
        Ok(Sentence::Fact(l)) => Some(l),
        Ok(Sentence::Rule(_)) => {
            fail(Section::Question, 0, &instance.question, "question is a rule".into());
            None
        }
        Err(e) => {
            fail(Section::Question, 0, &instance.question, reason(e));
            None
        }
    };
    match query {
        Some(query) if failures.is_empty() => Program::new(facts, rules, query).map_err(|e| {
            NlError::Untranslatable {
                failures: vec![SentenceFailure {
                    section: Section::Facts,
                    index: 0,
                    sentence: String::new(),
                    reason: e.to_string(),
                }],
            }
        }),
        _ => Err(NlError::Untranslatable { failures }),
    }
}
