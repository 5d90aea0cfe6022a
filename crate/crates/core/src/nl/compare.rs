use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NlFrontend, Sentence};
use crate::logic::{Literal, Rule};

/// Verdict of the deterministic comparator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "verdict", content = "detail")]
pub enum Comparison {
    Same,
    Different(String),
}

impl Comparison {
    pub fn is_same(&self) -> bool {
        matches!(self, Comparison::Same)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Fact(Literal),
    Rule(Rule),
    Query(Literal),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Fact(l) => write!(f, "{l}."),
            Item::Rule(r) => write!(f, "{r}"),
            Item::Query(l) => write!(f, "? {l}."),
        }
    }
}

fn canonical_set(frontend: &NlFrontend, sentences: &[String]) -> (BTreeSet<Item>, Vec<String>) {
    let mut items = BTreeSet::new();
    let mut unparsed = Vec::new();
    for s in sentences {
        if s.trim().is_empty() {
            continue;
        }
        let question = s.trim_end().ends_with('?');
        match frontend.parse_sentence(s) {
            Ok(Sentence::Fact(l)) if question => {
                items.insert(Item::Query(l));
            }
            Ok(Sentence::Fact(l)) => {
                items.insert(Item::Fact(l));
            }
            Ok(Sentence::Rule(r)) => {
                items.insert(Item::Rule(r.canonical()));
            }
            Err(_) => unparsed.push(s.clone()),
        }
    }
    (items, unparsed)
}

fn join<'a>(items: impl Iterator<Item = &'a Item>) -> String {
    items.map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub(super) fn canonical_compare(frontend: &NlFrontend, a: &[String], b: &[String]) -> Comparison {
    let (left, left_bad) = canonical_set(frontend, a);
    let (right, right_bad) = canonical_set(frontend, b);
    let mut parts = Vec::new();
    if !left_bad.is_empty() {
        parts.push(format!("unparseable in original: {left_bad:?}"));
    }
    if !right_bad.is_empty() {
        parts.push(format!("unparseable in round-trip: {right_bad:?}"));
    }
    let only_left: Vec<&Item> = left.difference(&right).collect();
    let only_right: Vec<&Item> = right.difference(&left).collect();
    if !only_left.is_empty() {
        parts.push(format!("only in original: {}", join(only_left.into_iter())));
    }
    if !only_right.is_empty() {
        parts.push(format!("only in round-trip: {}", join(only_right.into_iter())));
    }
    if parts.is_empty() {
        Comparison::Same
    } else {
        Comparison::Different(parts.join("; "))
    }
}
