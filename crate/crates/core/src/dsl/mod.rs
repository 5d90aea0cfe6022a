//! Textual syntax for programs.
//!
//! ```text
//! program   := statement+
//! fact      := literal "."
//! rule      := literal ":-" literal ("," literal)* "."
//! query     := "?" literal "."
//! literal   := ["~"] ident "(" term ("," term)* ")"
//! ```
//!
//! Constants start lowercase, variables uppercase, `#` comments run to the
//! end of the line, and a program has exactly one query. Stored programs use
//! the `.dlp` extension.

mod lexer;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Literal, Program, Rule};

pub use parser::{parse_program, parse_statements, Located};

/// Grammar summary injected into translation prompts.
pub const GRAMMAR: &str = "\
program   := statement+
fact      := literal \".\"
rule      := literal \":-\" literal (\",\" literal)* \".\"
query     := \"?\" literal \".\"
literal   := [\"~\"] name \"(\" term (\",\" term)* \")\"
Constants are lowercase words (bob, dog), variables are uppercase (X).
\"~\" marks a negated literal: \"bob is not big\" is ~big(bob).
Predicates take one or two arguments. Write exactly one query.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    LlmGenerated,
    OracleGenerated,
    File,
}

/// Candidate program text, possibly invalid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgramText {
    pub text: String,
    pub origin: Origin,
}

impl SourceProgramText {
    pub fn new(text: impl Into<String>, origin: Origin) -> Self {
        SourceProgramText {
            text: text.into(),
            origin,
        }
    }

    pub fn parse(&self) -> Result<Program, Vec<ParseDiagnostic>> {
        parse_program(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticKind {
    Lex,
    Syntax,
    Safety,
    Arity,
    DuplicateQuery,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Lex => "lex",
            DiagnosticKind::Syntax => "syntax",
            DiagnosticKind::Safety => "safety",
            DiagnosticKind::Arity => "arity",
            DiagnosticKind::DuplicateQuery => "duplicate-query",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(line: usize, column: usize, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            line,
            column,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {} error: {}",
            self.line, self.column, self.kind, self.message
        )
    }
}

/// One diagnostic per line, in the form fed back to the model.
pub fn render_diagnostics(diagnostics: &[ParseDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Fact(Literal),
    Rule(Rule),
    Query(Literal),
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Fact(l) => write!(f, "{l}."),
            Statement::Rule(r) => write!(f, "{r}"),
            Statement::Query(l) => write!(f, "? {l}."),
        }
    }
}

/// Canonical statement order: facts sorted by text, rules sorted by
/// (head, body), then the query.
pub fn canonical_statements(program: &Program) -> Vec<Statement> {
    let mut facts: Vec<(String, &Literal)> =
        program.facts().iter().map(|f| (f.to_string(), f)).collect();
    facts.sort();
    let mut rules: Vec<(String, Vec<String>, &Rule)> = program
        .rules()
        .iter()
        .map(|r| {
            (
                r.head.to_string(),
                r.body.iter().map(ToString::to_string).collect(),
                r,
            )
        })
        .collect();
    rules.sort();
    facts
        .into_iter()
        .map(|(_, f)| Statement::Fact(f.clone()))
        .chain(rules.into_iter().map(|(_, _, r)| Statement::Rule(r.clone())))
        .chain(std::iter::once(Statement::Query(program.query().clone())))
        .collect()
}

/// Canonical text: one statement per line, LF terminated.
pub fn format_program(program: &Program) -> SourceProgramText {
    let mut text = String::new();
    for s in canonical_statements(program) {
        text.push_str(&s.to_string());
        text.push('\n');
    }
    SourceProgramText::new(text, Origin::OracleGenerated)
}
