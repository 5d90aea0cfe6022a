//! Terms, literals, rules and programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LogicError;

/// Returns true when `name` matches `[A-Za-z][A-Za-z0-9_]*`.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A constant (lowercase-initial) or a variable (uppercase-initial).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Constant(String),
    Variable(String),
}

impl Term {
    /// Builds a term, inferring its kind from the case of the first character.
    pub fn parse(name: &str) -> Result<Self, LogicError> {
        if !is_identifier(name) {
            return Err(LogicError::InvalidIdentifier(name.to_string()));
        }
        if name.starts_with(|c: char| c.is_ascii_uppercase()) {
            Ok(Term::Variable(name.to_string()))
        } else {
            Ok(Term::Constant(name.to_string()))
        }
    }

    pub fn constant(name: &str) -> Result<Self, LogicError> {
        match Self::parse(name)? {
            t @ Term::Constant(_) => Ok(t),
            Term::Variable(_) => Err(LogicError::InvalidIdentifier(name.to_string())),
        }
    }

    pub fn variable(name: &str) -> Result<Self, LogicError> {
        match Self::parse(name)? {
            t @ Term::Variable(_) => Ok(t),
            Term::Constant(_) => Err(LogicError::InvalidIdentifier(name.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Constant(n) | Term::Variable(n) => n,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

/// An atom with a polarity. Negative literals denote the explicit "negative
/// twin" of the predicate, not negation as failure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Term>,
    pub polarity: Polarity,
}

impl Literal {
    pub fn new(polarity: Polarity, predicate: &str, args: Vec<Term>) -> Result<Self, LogicError> {
        if !is_identifier(predicate) {
            return Err(LogicError::InvalidIdentifier(predicate.to_string()));
        }
        if !(1..=2).contains(&args.len()) {
            return Err(LogicError::BadArity {
                predicate: predicate.to_string(),
                arity: args.len(),
            });
        }
        Ok(Literal {
            predicate: predicate.to_string(),
            args,
            polarity,
        })
    }

    pub fn positive(predicate: &str, args: Vec<Term>) -> Result<Self, LogicError> {
        Self::new(Polarity::Positive, predicate, args)
    }

    pub fn negative(predicate: &str, args: Vec<Term>) -> Result<Self, LogicError> {
        Self::new(Polarity::Negative, predicate, args)
    }

    /// Ground literal from constant names, e.g. `Literal::fact("like", &["dog", "cat"])`.
    pub fn fact(predicate: &str, constants: &[&str]) -> Result<Self, LogicError> {
        let args = constants
            .iter()
            .map(|c| Term::constant(c))
            .collect::<Result<Vec<_>, _>>()?;
        Self::positive(predicate, args)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_variable())
    }

    pub fn is_negative(&self) -> bool {
        self.polarity == Polarity::Negative
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The same atom with the opposite polarity.
    pub fn twin(&self) -> Literal {
        Literal {
            polarity: self.polarity.flip(),
            ..self.clone()
        }
    }

    pub fn negated(mut self) -> Literal {
        self.polarity = self.polarity.flip();
        self
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v.as_str()),
            Term::Constant(_) => None,
        })
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Constant(c) => Some(c.as_str()),
            Term::Variable(_) => None,
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negative() {
            f.write_str("~")?;
        }
        write!(f, "{}(", self.predicate)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub head: Literal,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Literal, body: Vec<Literal>) -> Result<Self, LogicError> {
        if body.is_empty() {
            return Err(LogicError::EmptyBody(head.to_string()));
        }
        Ok(Rule { head, body })
    }

    /// First variable that occurs in the head but in no body literal.
    ///
    /// Negative body literals match explicit negative-twin atoms, so they
    /// bind variables just like positive ones.
    pub fn unbound_variable(&self) -> Option<&str> {
        let bound: BTreeSet<&str> = self.body.iter().flat_map(|l| l.variables()).collect();
        self.head.variables().find(|v| !bound.contains(v))
    }

    pub fn is_safe(&self) -> bool {
        self.unbound_variable().is_none()
    }

    /// Body sorted and deduplicated; used for set-style comparison.
    pub fn canonical(&self) -> Rule {
        let body: BTreeSet<Literal> = self.body.iter().cloned().collect();
        Rule {
            head: self.head.clone(),
            body: body.into_iter().collect(),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

/// Facts, rules and exactly one ground query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    facts: BTreeSet<Literal>,
    rules: Vec<Rule>,
    query: Literal,
}

impl Program {
    /// Validates groundness of facts and query, and that every predicate is
    /// used with a single arity. Rule safety is checked by stratification and
    /// fact consistency by evaluation, so both can be reported with context.
    pub fn new(
        facts: impl IntoIterator<Item = Literal>,
        rules: Vec<Rule>,
        query: Literal,
    ) -> Result<Self, LogicError> {
        let facts: BTreeSet<Literal> = facts.into_iter().collect();
        if let Some(f) = facts.iter().find(|f| !f.is_ground()) {
            return Err(LogicError::NonGround(f.to_string()));
        }
        if !query.is_ground() {
            return Err(LogicError::NonGround(query.to_string()));
        }
        let program = Program { facts, rules, query };
        program.check_arities()?;
        Ok(program)
    }

    fn check_arities(&self) -> Result<(), LogicError> {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for lit in self.literals() {
            let arity = *seen.entry(&lit.predicate).or_insert(lit.arity());
            if arity != lit.arity() {
                return Err(LogicError::ArityMismatch {
                    predicate: lit.predicate.clone(),
                    expected: arity,
                    found: lit.arity(),
                });
            }
        }
        Ok(())
    }

    pub fn facts(&self) -> &BTreeSet<Literal> {
        &self.facts
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn query(&self) -> &Literal {
        &self.query
    }

    /// Returns a copy with extra facts; arity is re-validated.
    pub fn with_facts(&self, extra: impl IntoIterator<Item = Literal>) -> Result<Self, LogicError> {
        let facts = self.facts.iter().cloned().chain(extra);
        Program::new(facts, self.rules.clone(), self.query.clone())
    }

    pub fn with_query(&self, query: Literal) -> Result<Self, LogicError> {
        Program::new(self.facts.iter().cloned(), self.rules.clone(), query)
    }

    /// Every literal occurrence in facts, rules and the query.
    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.facts
            .iter()
            .chain(
                self.rules
                    .iter()
                    .flat_map(|r| std::iter::once(&r.head).chain(r.body.iter())),
            )
            .chain(std::iter::once(&self.query))
    }

    /// Predicate name to arity.
    pub fn predicates(&self) -> BTreeMap<String, usize> {
        self.literals()
            .map(|l| (l.predicate.clone(), l.arity()))
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.literals()
            .flat_map(|l| l.constants())
            .map(str::to_string)
            .collect()
    }

    /// Equality up to rule order (rules compared as a sorted multiset).
    pub fn structurally_eq(&self, other: &Program) -> bool {
        let mut a = self.rules.clone();
        let mut b = other.rules.clone();
        a.sort();
        b.sort();
        self.facts == other.facts && self.query == other.query && a == b
    }
}
