//! Recursive-descent parser with statement-level error recovery.

use std::collections::BTreeMap;

use super::lexer::{tokenize, Token, TokenKind};
use super::{DiagnosticKind, ParseDiagnostic, Statement};
use crate::logic::{Literal, Polarity, Program, Rule, Term};

/// A parsed statement and the position of its first token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located<T> {
    pub value: T,
    pub line: usize,
    pub column: usize,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
}

/// Located literal plus per-argument positions are not needed; the literal's
/// own position is enough for arity and safety reports.
type LocatedLiteral = Located<Literal>;

struct Failed;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&mut self, kind: DiagnosticKind, message: String) -> Failed {
        let t = self.peek();
        self.diagnostics
            .push(ParseDiagnostic::new(t.line, t.column, kind, message));
        Failed
    }

    fn expect(&mut self, kind: TokenKind, context: &str) -> Result<Token, Failed> {
        if self.peek().kind == kind {
            Ok(self.bump())
        } else {
            let found = self.peek().kind.describe();
            Err(self.error_here(
                DiagnosticKind::Syntax,
                format!("expected {} {context}, found {found}", kind.describe()),
            ))
        }
    }

    /// Skips past the next `.` (or to end of input).
    fn recover(&mut self) {
        loop {
            match self.bump().kind {
                TokenKind::Dot | TokenKind::Eof => return,
                _ => {}
            }
        }
    }

    fn literal(&mut self) -> Result<LocatedLiteral, Failed> {
        let start = self.peek().clone();
        let polarity = if self.peek().kind == TokenKind::Tilde {
            self.bump();
            Polarity::Negative
        } else {
            Polarity::Positive
        };
        let predicate = match self.peek().kind.clone() {
            TokenKind::Ident(name) => {
                self.bump();
                name
            }
            other => {
                return Err(self.error_here(
                    DiagnosticKind::Syntax,
                    format!("expected predicate name, found {}", other.describe()),
                ))
            }
        };
        self.expect(TokenKind::LParen, &format!("after predicate `{predicate}`"))?;
        let mut args = Vec::new();
        loop {
            match self.peek().kind.clone() {
                TokenKind::Ident(name) => {
                    self.bump();
                    // Identifiers from the lexer are always valid terms.
                    args.push(Term::parse(&name).expect("lexer yields identifiers"));
                }
                other => {
                    return Err(self.error_here(
                        DiagnosticKind::Syntax,
                        format!("expected constant or variable, found {}", other.describe()),
                    ))
                }
            }
            match self.peek().kind {
                TokenKind::Comma => {
                    self.bump();
                }
                TokenKind::RParen => {
                    self.bump();
                    break;
                }
                _ => {
                    let found = self.peek().kind.describe();
                    return Err(self.error_here(
                        DiagnosticKind::Syntax,
                        format!("expected `,` or `)` in arguments of `{predicate}`, found {found}"),
                    ));
                }
            }
        }
        let arity = args.len();
        match Literal::new(polarity, &predicate, args) {
            Ok(literal) => Ok(Located {
                value: literal,
                line: start.line,
                column: start.column,
            }),
            Err(_) => {
                self.diagnostics.push(ParseDiagnostic::new(
                    start.line,
                    start.column,
                    DiagnosticKind::Arity,
                    format!("predicate `{predicate}` has {arity} arguments; only 1 or 2 are allowed"),
                ));
                Err(Failed)
            }
        }
    }

    fn statement(&mut self) -> Result<Located<Statement>, Failed> {
        let start = self.peek().clone();
        let at = |value| Located {
            value,
            line: start.line,
            column: start.column,
        };
        if start.kind == TokenKind::Question {
            self.bump();
            let query = self.literal()?;
            self.expect(TokenKind::Dot, "to end the query")?;
            return Ok(at(Statement::Query(query.value)));
        }
        let head = self.literal()?;
        match self.peek().kind {
            TokenKind::Dot => {
                self.bump();
                Ok(at(Statement::Fact(head.value)))
            }
            TokenKind::Turnstile => {
                self.bump();
                let mut body = vec![self.literal()?.value];
                while self.peek().kind == TokenKind::Comma {
                    self.bump();
                    body.push(self.literal()?.value);
                }
                self.expect(TokenKind::Dot, "to end the rule")?;
                let rule = Rule::new(head.value, body).expect("body is non-empty");
                Ok(at(Statement::Rule(rule)))
            }
            _ => {
                let found = self.peek().kind.describe();
                Err(self.error_here(
                    DiagnosticKind::Syntax,
                    format!("expected `.` or `:-` after `{}`, found {found}", head.value),
                ))
            }
        }
    }
}

/// Parses statements without program-level checks, recovering at each `.`.
pub fn parse_statements(src: &str) -> (Vec<Located<Statement>>, Vec<ParseDiagnostic>) {
    let (tokens, lex_diagnostics) = tokenize(src);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diagnostics: lex_diagnostics,
    };
    let mut statements = Vec::new();
    while parser.peek().kind != TokenKind::Eof {
        match parser.statement() {
            Ok(s) => statements.push(s),
            Err(Failed) => parser.recover(),
        }
    }
    let mut diagnostics = parser.diagnostics;
    diagnostics.sort_by_key(|d| (d.line, d.column));
    (statements, diagnostics)
}

fn end_position(src: &str) -> (usize, usize) {
    let line = src.matches('\n').count() + 1;
    let column = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses a complete program: statements plus groundness, safety, arity and
/// single-query checks.
pub fn parse_program(src: &str) -> Result<Program, Vec<ParseDiagnostic>> {
    let (statements, mut diagnostics) = parse_statements(src);

    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    let mut query: Option<Literal> = None;

    for s in statements {
        let diag = |kind, message: String| ParseDiagnostic::new(s.line, s.column, kind, message);
        let literals: Vec<&Literal> = match &s.value {
            Statement::Fact(l) | Statement::Query(l) => vec![l],
            Statement::Rule(r) => std::iter::once(&r.head).chain(&r.body).collect(),
        };
        for lit in literals {
            let expected = *arities.entry(lit.predicate.clone()).or_insert(lit.arity());
            if expected != lit.arity() {
                diagnostics.push(diag(
                    DiagnosticKind::Arity,
                    format!(
                        "predicate `{}` used with {} arguments, previously {expected}",
                        lit.predicate,
                        lit.arity()
                    ),
                ));
            }
        }
        match s.value {
            Statement::Fact(lit) => {
                if lit.is_ground() {
                    facts.push(lit);
                } else {
                    diagnostics.push(diag(
                        DiagnosticKind::Safety,
                        format!("fact `{lit}` contains a variable; facts must be ground"),
                    ));
                }
            }
            Statement::Query(lit) => {
                if query.is_some() {
                    diagnostics.push(diag(
                        DiagnosticKind::DuplicateQuery,
                        format!("second query `? {lit}.`; a program has exactly one query"),
                    ));
                } else if !lit.is_ground() {
                    diagnostics.push(diag(
                        DiagnosticKind::Safety,
                        format!("query `{lit}` contains a variable; queries must be ground"),
                    ));
                    // Counts as the query so that a later one is still a duplicate.
                    query = Some(lit);
                } else {
                    query = Some(lit);
                }
            }
            Statement::Rule(rule) => {
                if let Some(v) = rule.unbound_variable() {
                    diagnostics.push(diag(
                        DiagnosticKind::Safety,
                        format!("variable {v} in the head of `{rule}` does not occur in its body"),
                    ));
                } else {
                    rules.push(rule);
                }
            }
        }
    }

    let Some(query) = query else {
        let (line, column) = end_position(src);
        diagnostics.push(ParseDiagnostic::new(
            line,
            column,
            DiagnosticKind::Syntax,
            "missing query: expected a statement of the form `? literal.`",
        ));
        return Err(diagnostics);
    };
    if !diagnostics.is_empty() {
        diagnostics.sort_by_key(|d| (d.line, d.column));
        return Err(diagnostics);
    }
    Program::new(facts, rules, query).map_err(|e| {
        vec![ParseDiagnostic::new(1, 1, DiagnosticKind::Syntax, e.to_string())]
    })
}
