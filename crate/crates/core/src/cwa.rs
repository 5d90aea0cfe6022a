//! Closed-world completion of meta attributes.
//!
//! A meta attribute is a unary predicate no rule concludes positively; it can
//! only hold for an entity if stated as a fact. For every entity that lacks
//! such a fact, the explicit negative fact is added so that rules requiring
//! `~p(X)` can fire.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::logic::{Literal, Polarity, Program, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPredicateReport {
    pub meta_predicates: BTreeSet<String>,
    pub entities: BTreeSet<String>,
    /// Supplements in canonical (sorted) order.
    pub added: Vec<Literal>,
}

pub fn find_meta_predicates(program: &Program) -> BTreeSet<String> {
    let derived: BTreeSet<&str> = program
        .rules()
        .iter()
        .filter(|r| r.head.polarity == Polarity::Positive)
        .map(|r| r.head.predicate.as_str())
        .collect();
    program
        .predicates()
        .into_iter()
        .filter(|(p, arity)| *arity == 1 && !derived.contains(p.as_str()))
        .map(|(p, _)| p)
        .collect()
}

pub fn analyze(program: &Program) -> MetaPredicateReport {
    let meta_predicates = find_meta_predicates(program);
    let entities = program.constants();
    let mut added = Vec::new();
    for p in &meta_predicates {
        for e in &entities {
            let atom = Literal {
                predicate: p.clone(),
                args: vec![Term::Constant(e.clone())],
                polarity: Polarity::Positive,
            };
            let negative = atom.twin();
            if !program.facts().contains(&atom) && !program.facts().contains(&negative) {
                added.push(negative);
            }
        }
    }
    added.sort_by_key(ToString::to_string);
    MetaPredicateReport {
        meta_predicates,
        entities,
        added,
    }
}

/// The program with negative facts for every absent meta attribute.
pub fn supplement(program: &Program) -> Program {
    let report = analyze(program);
    program
        .with_facts(report.added)
        .expect("supplements reuse existing unary predicates")
}
