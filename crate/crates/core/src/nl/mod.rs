//! Deterministic translation between benchmark sentences and programs.
//!
//! Used as the oracle behind the mock backends, as the canonicalizer of the
//! deterministic comparator, and as the target format of back-translation.

mod compare;
mod instance;
mod lexicon;
mod sentence;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{canonical_statements, Statement};
use crate::logic::{Literal, Program, Rule};

pub use compare::Comparison;
pub use instance::{Instance, Pattern, Section, SentenceFailure};
pub use lexicon::Lexicon;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NlError {
    #[error("unrecognized sentence {sentence:?}: {reason}")]
    Unrecognized { sentence: String, reason: String },
    #[error("{} sentence(s) could not be translated: {}", failures.len(), failures.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Untranslatable { failures: Vec<SentenceFailure> },
    #[error("lexicon: {0}")]
    Lexicon(String),
}

/// Logical content of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sentence {
    Fact(Literal),
    Rule(Rule),
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sentence::Fact(l) => write!(f, "{l}."),
            Sentence::Rule(r) => write!(f, "{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropositionKind {
    Fact,
    Rule,
}

/// A sentence together with its parsed form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub kind: PropositionKind,
    pub surface: String,
    pub parsed: Sentence,
}

/// The sentence translator. Cheap to clone; holds only the lexicon.
#[derive(Debug, Clone, Default)]
pub struct NlFrontend {
    lexicon: Lexicon,
}

impl NlFrontend {
    pub fn new(lexicon: Lexicon) -> Self {
        NlFrontend { lexicon }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn parse_sentence(&self, sentence: &str) -> Result<Sentence, NlError> {
        sentence::parse(&self.lexicon, sentence)
    }

    pub fn proposition(&self, sentence: &str) -> Result<Proposition, NlError> {
        let parsed = self.parse_sentence(sentence)?;
        let kind = match parsed {
            Sentence::Fact(_) => PropositionKind::Fact,
            Sentence::Rule(_) => PropositionKind::Rule,
        };
        Ok(Proposition {
            kind,
            surface: sentence.to_string(),
            parsed,
        })
    }

    /// Canonical sentence for a parsed form.
    pub fn render(&self, sentence: &Sentence) -> String {
        match sentence {
            Sentence::Fact(l) => sentence::render_fact(&self.lexicon, l),
            Sentence::Rule(r) => sentence::render_rule(&self.lexicon, r),
        }
    }

    pub fn render_fact(&self, literal: &Literal) -> String {
        sentence::render_fact(&self.lexicon, literal)
    }

    /// Query sentences end with `?` so comparisons can tell them apart from facts.
    pub fn render_question(&self, literal: &Literal) -> String {
        sentence::render_question(&self.lexicon, literal)
    }

    /// Sentences for statements in the given order.
    pub fn back_translate_statements<'a>(
        &self,
        statements: impl IntoIterator<Item = &'a Statement>,
    ) -> Vec<String> {
        statements
            .into_iter()
            .map(|s| match s {
                Statement::Fact(l) => self.render_fact(l),
                Statement::Rule(r) => sentence::render_rule(&self.lexicon, r),
                Statement::Query(l) => self.render_question(l),
            })
            .collect()
    }

    /// Canonical sentences in canonical program order, query last.
    pub fn back_translate(&self, program: &Program) -> Vec<String> {
        self.back_translate_statements(&canonical_statements(program))
    }

    pub fn translate_instance(&self, instance: &Instance) -> Result<Program, NlError> {
        instance::translate(self, instance, &[])
    }

    /// Translation with closed-world supplement sentences appended to the facts.
    pub fn translate_with_supplements(
        &self,
        instance: &Instance,
        supplements: &[String],
    ) -> Result<Program, NlError> {
        instance::translate(self, instance, supplements)
    }

    pub fn canonical_compare(&self, a: &[String], b: &[String]) -> Comparison {
        compare::canonical_compare(self, a, b)
    }
}
